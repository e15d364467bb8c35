"""
Tests for Predictor Components

Tests for attention pooling, the quality network, the composite loss, the
schedules, the Adam step, training and checkpoint management.
"""

import unittest
import os
import shutil
import sys
import tempfile

import numpy as np
import torch
from torch import nn

# Add project root to Python path
sys.path.insert(0, os.path.dirname(os.path.dirname(os.path.abspath(__file__))))

from src.core_model import (
    DimensionMismatchError,
    FeatureMap,
    GrayImage,
    NumericError,
    OcclusionMask,
    RealGrid,
    ValidationError,
    write_image,
    write_mask,
)
from src.predictor import (
    ModelConfig,
    ModelManager,
    TrainConfig,
    TrainingSet,
    adam_step,
    anneal_lambda,
    attention_pool,
    attention_pool_map,
    build_model,
    build_optimizer,
    composite_loss,
    forward,
    gradient_check,
    heatmap_target,
    history_frame,
    loss_and_gradients,
    lr_schedule,
    predict,
    predict_records,
    prediction_loss,
    prepare_training_set,
    train,
)
from src.predictor.network import with_coordinates
from tests.fixtures import make_geometry, make_record

SMALL = ModelConfig(channels=(3, 4, 4))


def half_bright_set(n=1, width=16, height=16, dfs=0.7):
    """Images whose left half is bright, with the left half as heatmap target."""
    images = torch.zeros(n, 1, height, width)
    images[..., : width // 2] = 1.0
    masks = torch.zeros(n, 1, height // 4, width // 4)
    masks[..., : width // 8] = 1.0
    return TrainingSet(images=images, dfs_targets=torch.full((n,), dfs), mask_targets=masks,
                       sample_ids=[f"s{i}" for i in range(n)])


class TestAttentionPool(unittest.TestCase):
    """Test cases for heatmap-weighted pooling."""

    def setUp(self):
        self.rng = np.random.default_rng(0)

    def test_uniform_heatmap_is_spatial_mean(self):
        for _ in range(100):
            h, w, c = self.rng.integers(1, 9, size=3)
            values = self.rng.standard_normal((h, w, c))
            pooled = attention_pool_map(FeatureMap(values), RealGrid(np.ones((h, w))))
            expected = values.mean(axis=(0, 1))
            np.testing.assert_allclose(pooled, expected, rtol=1e-6, atol=1e-12)

    def test_one_hot_heatmap(self):
        values = self.rng.standard_normal((4, 5, 3))
        heatmap = np.zeros((4, 5))
        heatmap[2, 1] = 1.0
        np.testing.assert_array_equal(attention_pool_map(FeatureMap(values), RealGrid(heatmap)), values[2, 1])

    def test_hand_expanded_example(self):
        features = FeatureMap(np.array([[1.0, 2.0], [3.0, 4.0]])[:, :, None])
        heatmap = RealGrid(np.array([[1.0, 0.0], [0.0, 3.0]]))
        self.assertAlmostEqual(float(attention_pool_map(features, heatmap)[0]), 3.25, places=12)

    def test_scale_invariance(self):
        values = self.rng.standard_normal((6, 8, 4))
        heatmap = self.rng.uniform(0.01, 1.0, size=(6, 8))
        base = attention_pool_map(FeatureMap(values), RealGrid(heatmap))
        for k in (0.1, 1.0, 10.0):
            scaled = attention_pool_map(FeatureMap(values), RealGrid(k * heatmap))
            np.testing.assert_allclose(scaled, base, rtol=1e-6, atol=1e-12)

    def test_dimension_mismatch(self):
        with self.assertRaises(DimensionMismatchError):
            attention_pool_map(FeatureMap(np.ones((4, 4, 2))), RealGrid(np.ones((4, 5))))
        with self.assertRaises(DimensionMismatchError):
            attention_pool(torch.ones(1, 2, 4, 4), torch.ones(1, 2, 4, 4))

    def test_zero_heatmap(self):
        with self.assertRaises(ValidationError):
            attention_pool_map(FeatureMap(np.ones((4, 4, 2))), RealGrid(np.zeros((4, 4))))


class TestNetwork(unittest.TestCase):
    """Test cases for the forward pass and predict."""

    def setUp(self):
        self.rng = np.random.default_rng(1)
        self.image = GrayImage(self.rng.integers(0, 256, size=(24, 32), dtype=np.uint8))

    def test_heatmap_resolution(self):
        model = build_model(SMALL, seed=0)
        prediction = predict(model, self.image)
        self.assertEqual((prediction.heatmap.width, prediction.heatmap.height), (8, 6))

    def test_full_size_contract(self):
        model = build_model(SMALL, seed=0)
        prediction = predict(model, GrayImage(np.zeros((480, 640), dtype=np.uint8)))
        self.assertEqual((prediction.heatmap.width, prediction.heatmap.height), (160, 120))

    def test_quality_in_open_interval(self):
        model = build_model(SMALL, seed=2)
        prediction = predict(model, self.image)
        self.assertGreater(prediction.quality, 0.0)
        self.assertLess(prediction.quality, 1.0)
        self.assertTrue(((prediction.heatmap.values > 0) & (prediction.heatmap.values < 1)).all())

    def test_zero_regression_head(self):
        model = build_model(SMALL, seed=3)
        with torch.no_grad():
            model.regressor.weight.zero_()
            model.regressor.bias.zero_()
        self.assertEqual(predict(model, self.image).quality, 0.5)

    def test_saturated_logit_stays_in_open_interval(self):
        record = make_record("a", "c0", [1.0, 0.0], is_enrollment=True)
        for bias in (200.0, -200.0):
            model = build_model(SMALL, seed=3)
            with torch.no_grad():
                model.regressor.weight.zero_()
                model.regressor.bias.fill_(bias)
                model.heatmap_head.bias.fill_(abs(bias))
            prediction = predict(model, self.image, record)
            self.assertGreater(prediction.quality, 0.0)
            self.assertLess(prediction.quality, 1.0)
            self.assertEqual(prediction.quality_logit, bias)
            self.assertTrue(((prediction.heatmap.values > 0) & (prediction.heatmap.values < 1)).all())
            self.assertLess(prediction.record.predicted_quality, 1.0)

    def test_coordinate_planes(self):
        images = torch.zeros(2, 1, 8, 12)
        stacked = with_coordinates(images)
        self.assertEqual(tuple(stacked.shape), (2, 3, 8, 12))
        self.assertTrue(torch.equal(stacked[:, 0], images[:, 0]))
        self.assertEqual(float(stacked[0, 1, 0, 5]), -1.0)
        self.assertEqual(float(stacked[0, 1, -1, 5]), 1.0)
        self.assertEqual(float(stacked[1, 2, 4, 0]), -1.0)
        self.assertEqual(float(stacked[1, 2, 4, -1]), 1.0)

    def test_pooled_vector_sees_region_position(self):
        # Same content, iris region shifted down: the pooled vector must differ
        model = build_model(SMALL, seed=1)
        top = torch.zeros(1, 1, 32, 32)
        top[..., 4:12, 8:24] = 1.0
        bottom = torch.zeros(1, 1, 32, 32)
        bottom[..., 20:28, 8:24] = 1.0
        with torch.no_grad():
            first = model(top).pooled
            second = model(bottom).pooled
        self.assertFalse(torch.allclose(first, second))

    def test_deterministic(self):
        first = predict(build_model(SMALL, seed=4), self.image)
        second = predict(build_model(SMALL, seed=4), self.image)
        self.assertEqual(first.quality, second.quality)
        self.assertEqual(first.heatmap, second.heatmap)

    def test_seeded_build_leaves_global_rng(self):
        torch.manual_seed(123)
        expected = torch.rand(3)
        torch.manual_seed(123)
        build_model(SMALL, seed=9)
        np.testing.assert_array_equal(torch.rand(3).numpy(), expected.numpy())

    def test_size_not_divisible(self):
        model = build_model(SMALL, seed=0)
        with self.assertRaises(DimensionMismatchError):
            forward(model, GrayImage(np.zeros((16, 18), dtype=np.uint8)))

    def test_predict_updates_record_copy(self):
        model = build_model(SMALL, seed=0)
        record = make_record("a", "c0", [1.0, 0.0], is_enrollment=True)
        prediction = predict(model, self.image, record)
        self.assertEqual(prediction.record.predicted_quality, prediction.quality)
        self.assertIsNone(record.predicted_quality)

    def test_heatmap_target(self):
        geometry = make_geometry(center=(16.0, 16.0), pupil_radius=4.0, iris_radius=14.0)
        target = heatmap_target(OcclusionMask(np.ones((32, 32), dtype=bool)), geometry)
        self.assertEqual((target.width, target.height), (8, 8))
        self.assertTrue(set(np.unique(target.values)) <= {0.0, 1.0})
        # Corner blocks lie outside the iris, center block inside the pupil
        self.assertEqual(target.values[0, 0], 0.0)
        self.assertEqual(target.values[3, 3], 0.0)
        # Block at rows 4..7, cols 16..19 lies in the annulus
        self.assertEqual(target.values[1, 4], 1.0)


class TestLoss(unittest.TestCase):
    """Test cases for the composite loss and its gradients."""

    def test_dfs_term_vanishes_at_target(self):
        heatmap = torch.tensor([[[[0.2, 0.9], [0.6, 0.4]]]], dtype=torch.float64)
        mask = torch.tensor([[[[0.0, 1.0], [1.0, 0.0]]]], dtype=torch.float64)
        quality = torch.tensor([0.37], dtype=torch.float64)
        terms = composite_loss(quality, heatmap, quality.clone(), mask, 0.8)
        self.assertEqual(float(terms.dfs_loss), 0.0)
        self.assertEqual(float(terms.total), 0.8 * float(terms.mask_loss))

    def test_loss_zero_at_saturated_targets(self):
        mask = torch.tensor([[[[0.0, 1.0], [1.0, 0.0]]]], dtype=torch.float64)
        quality = torch.tensor([0.5], dtype=torch.float64)
        saturated = mask.clamp(1e-9, 1 - 1e-9)
        terms = composite_loss(quality, saturated, quality.clone(), mask, 0.5)
        self.assertLessEqual(float(terms.total), 1e-6)
        self.assertGreaterEqual(float(terms.total), 0.0)

    def test_lambda_range(self):
        ones = torch.ones(1, 1, 2, 2)
        with self.assertRaises(ValidationError):
            composite_loss(torch.ones(1) * 0.5, ones * 0.5, torch.ones(1), ones, 1.5)

    def test_shape_mismatch(self):
        with self.assertRaises(DimensionMismatchError):
            composite_loss(torch.ones(1) * 0.5, torch.full((1, 1, 2, 2), 0.5), torch.ones(1),
                           torch.ones(1, 1, 3, 2), 0.5)

    def test_logit_gradient_with_zero_lambda(self):
        model = build_model(SMALL, seed=5).double()
        images = torch.rand(1, 1, 16, 16, dtype=torch.float64, generator=torch.Generator().manual_seed(0))
        output = model(images)
        output.quality_logit.retain_grad()
        target = torch.tensor([0.9], dtype=torch.float64)
        masks = torch.zeros(1, 1, 4, 4, dtype=torch.float64)
        terms = composite_loss(output.quality, output.heatmap, target, masks, 0.0)
        terms.total.backward()
        q = float(output.quality)
        self.assertAlmostEqual(float(terms.total), (q - 0.9) ** 2, places=14)
        self.assertAlmostEqual(float(output.quality_logit.grad), 2 * (q - 0.9) * q * (1 - q), places=12)

    def test_prediction_loss_matches_batch_loss(self):
        model = build_model(SMALL, seed=6)
        image = GrayImage(np.random.default_rng(6).integers(0, 256, size=(16, 16), dtype=np.uint8))
        mask = RealGrid(np.eye(4))
        pred = predict(model, image)
        batch = torch.from_numpy(image.as_float() / 255.0).float()[None, None]
        loss, gradients = loss_and_gradients(model, batch, torch.tensor([0.6]),
                                             torch.from_numpy(mask.values).float()[None, None], 0.3)
        self.assertAlmostEqual(prediction_loss(pred, 0.6, mask, 0.3), loss, places=5)
        self.assertEqual(set(gradients), {name for name, _ in model.named_parameters()})

    def test_finite_difference_gradients(self):
        generator = torch.Generator().manual_seed(11)
        for seed in range(5):
            model = build_model(SMALL, seed=seed)
            self.assertLessEqual(model.parameter_count(), 5000)
            images = torch.rand(2, 1, 16, 12, generator=generator)
            dfs = torch.rand(2, generator=generator)
            masks = (torch.rand(2, 1, 4, 3, generator=generator) > 0.5).float()
            self.assertLess(gradient_check(model, images, dfs, masks, lam=0.6), 1e-4)


class TestSchedules(unittest.TestCase):
    """Test cases for lambda annealing and the learning-rate schedule."""

    def test_anneal_lambda(self):
        config = TrainConfig()
        self.assertEqual(anneal_lambda(0, config), 0.8)
        self.assertEqual(anneal_lambda(49, config), 0.8)
        self.assertEqual(anneal_lambda(50, config), 0.4)
        self.assertEqual(anneal_lambda(100, config), 0.2)

    def test_lr_schedule(self):
        config = TrainConfig(epochs=200)
        self.assertEqual(lr_schedule(0, config), 4e-4)
        self.assertEqual(lr_schedule(199, config), 4e-4 / 16)
        self.assertEqual(lr_schedule(20, TrainConfig(epochs=100)), 2e-4)

    def test_invalid_config(self):
        with self.assertRaises(ValidationError):
            TrainConfig(lambda0=1.0).validate()
        with self.assertRaises(ValidationError):
            TrainConfig(adam_beta2=1.0).validate()
        with self.assertRaises(ValidationError):
            TrainConfig.from_dict({"learning_rate": 0.1})

    def test_config_round_trip(self):
        config = TrainConfig(epochs=12, model=ModelConfig(channels=(2, 3, 4), activation="tanh"))
        self.assertEqual(TrainConfig.from_dict(config.to_dict()), config)


class TestAdamStep(unittest.TestCase):
    """Test cases for the Adam update."""

    def _single(self, value):
        layer = nn.Linear(1, 1, bias=False).double()
        with torch.no_grad():
            layer.weight.fill_(value)
        return layer

    def test_zero_gradient(self):
        layer = self._single(0.5)
        optimizer = build_optimizer(layer, TrainConfig())
        layer.weight.grad = torch.zeros_like(layer.weight)
        adam_step(layer, optimizer, 1e-3)
        self.assertEqual(float(layer.weight), 0.5)

    def test_first_step_hand_trace(self):
        layer = self._single(0.5)
        config = TrainConfig()
        optimizer = build_optimizer(layer, config)
        layer.weight.grad = torch.full_like(layer.weight, 0.3)
        adam_step(layer, optimizer, 1e-3)
        # First bias-corrected step: m_hat = g, v_hat = g^2
        expected = 0.5 - 1e-3 * 0.3 / (0.3 + config.adam_epsilon)
        self.assertAlmostEqual(float(layer.weight), expected, places=12)

    def test_non_finite_gradient(self):
        layer = self._single(0.5)
        optimizer = build_optimizer(layer, TrainConfig())
        layer.weight.grad = torch.full_like(layer.weight, float("nan"))
        with self.assertRaises(NumericError):
            adam_step(layer, optimizer, 1e-3)
        self.assertEqual(float(layer.weight), 0.5)


class TestTraining(unittest.TestCase):
    """Test cases for the training loop."""

    def test_overfit_one_sample(self):
        config = TrainConfig(lambda0=0.5, lr0=1e-2, lr_halvings=0, epochs=150, batch_size=1, model=SMALL)
        result = train(half_bright_set(), config)
        self.assertLessEqual(result.history[-1].loss, 0.5 * result.history[0].loss)

    def test_deterministic(self):
        config = TrainConfig(epochs=8, batch_size=2, seed=3, model=SMALL)
        first = train(half_bright_set(n=5), config)
        second = train(half_bright_set(n=5), config)
        self.assertEqual(first.history, second.history)
        for entry in first.history:
            self.assertIs(type(entry.loss), float)
            self.assertIs(type(entry.mask_loss), float)
            self.assertIs(type(entry.dfs_loss), float)
        for (name, a), (_, b) in zip(first.model.state_dict().items(), second.model.state_dict().items()):
            self.assertTrue(torch.equal(a, b), name)

    def test_schedule_log(self):
        config = TrainConfig(epochs=120, batch_size=1, model=ModelConfig(channels=(1, 1, 1)))
        result = train(half_bright_set(width=8, height=8), config)
        lambdas = [entry.lam for entry in result.history]
        self.assertEqual(lambdas, [0.8] * 50 + [0.4] * 50 + [0.2] * 20)
        rates = [entry.lr for entry in result.history]
        changes = [(a, b) for a, b in zip(rates, rates[1:]) if a != b]
        self.assertEqual(len(changes), 4)
        self.assertTrue(all(b == a / 2 for a, b in changes))
        frame = history_frame(result.history)
        self.assertEqual(list(frame.columns), ["epoch", "lambda", "lr", "loss", "mask_loss", "dfs_loss"])

    def test_empty_training_set(self):
        with self.assertRaises(ValidationError):
            prepare_training_set([])


class TestCheckpointsAndInference(unittest.TestCase):
    """Test cases for ModelManager and batch inference."""

    def setUp(self):
        self.temp_dir = tempfile.mkdtemp()
        self.manager = ModelManager(models_dir=self.temp_dir)
        self.result = train(half_bright_set(n=2), TrainConfig(epochs=3, batch_size=2, model=SMALL))

    def tearDown(self):
        shutil.rmtree(self.temp_dir, ignore_errors=True)

    def test_round_trip(self):
        path = self.manager.save_checkpoint(self.result)
        model, config, metadata = self.manager.load_checkpoint(path)
        self.assertEqual(config, self.result.config)
        self.assertEqual(metadata["epochs"], 3)
        self.assertIs(type(metadata["final_loss"]), float)
        self.assertEqual(metadata["final_loss"], self.result.history[-1].loss)
        self.assertEqual(metadata["parameters"], model.parameter_count())
        for name, tensor in self.result.model.state_dict().items():
            self.assertTrue(torch.equal(model.state_dict()[name], tensor), name)
        self.assertEqual(self.manager.list_checkpoints(), [path])

    def test_unsupported_format(self):
        path = os.path.join(self.temp_dir, "bad.pt")
        torch.save({"format_version": 99}, path)
        with self.assertRaises(ValidationError):
            self.manager.load_checkpoint(path)

    def test_predict_records_and_training_set(self):
        geometry = make_geometry(center=(16.0, 16.0), pupil_radius=4.0, iris_radius=12.0)
        rng = np.random.default_rng(8)
        records = []
        for i in range(3):
            record = make_record(f"s{i}", "c0", rng.standard_normal(4), is_enrollment=i == 0,
                                 geometry=geometry, dfs_label=1.0 if i == 0 else 0.5)
            write_image(GrayImage(rng.integers(0, 256, size=(32, 32), dtype=np.uint8)),
                        os.path.join(self.temp_dir, record.image_path))
            write_mask(OcclusionMask(geometry.annulus(32, 32)), os.path.join(self.temp_dir, record.occlusion_path))
            records.append(record)

        training_set = prepare_training_set(records, base_dir=self.temp_dir)
        self.assertEqual(tuple(training_set.images.shape), (3, 1, 32, 32))
        self.assertEqual(tuple(training_set.mask_targets.shape), (3, 1, 8, 8))

        predicted = predict_records(self.result.model, records, base_dir=self.temp_dir)
        self.assertTrue(all(0.0 < r.predicted_quality < 1.0 for r in predicted))
        self.assertTrue(all(r.predicted_quality is None for r in records))


if __name__ == '__main__':
    unittest.main()
