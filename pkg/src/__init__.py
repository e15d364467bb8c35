"""
Iris Quality Toolkit - Main Source Package

Recognition-oriented iris image quality assessment: hand-crafted quality factors,
feature-space distance (DFS) labels, an attention-pooled DFS predictor and the
IRR-EER evaluation protocol, with a seeded synthetic data generator.
"""

__version__ = "0.1.0"
__description__ = "Iris Quality Toolkit - recognition-oriented iris image quality assessment"
