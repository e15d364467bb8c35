"""
Quality Predictor Package

Attention-pooled network that predicts DFS quality from an eye image, its
training loop and checkpoint management.
"""

from .network import (
    ModelConfig,
    Prediction,
    NetOutput,
    IrisQualityNet,
    attention_pool,
    attention_pool_map,
    build_model,
    forward,
    predict,
    heatmap_target,
    image_tensor,
)
from .training import (
    TrainConfig,
    EpochLog,
    TrainingSet,
    TrainingResult,
    anneal_lambda,
    lr_schedule,
    composite_loss,
    prediction_loss,
    loss_and_gradients,
    build_optimizer,
    adam_step,
    prepare_training_set,
    train,
    history_frame,
    gradient_check,
)
from .model_manager import ModelManager
from .inference import predict_records

__all__ = [
    'ModelConfig',
    'Prediction',
    'NetOutput',
    'IrisQualityNet',
    'attention_pool',
    'attention_pool_map',
    'build_model',
    'forward',
    'predict',
    'heatmap_target',
    'image_tensor',
    'TrainConfig',
    'EpochLog',
    'TrainingSet',
    'TrainingResult',
    'anneal_lambda',
    'lr_schedule',
    'composite_loss',
    'prediction_loss',
    'loss_and_gradients',
    'build_optimizer',
    'adam_step',
    'prepare_training_set',
    'train',
    'history_frame',
    'gradient_check',
    'ModelManager',
    'predict_records',
]
