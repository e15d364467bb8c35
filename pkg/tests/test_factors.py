"""
Tests for Quality Factor Components

Tests for the five hand-crafted factors and the FactorEngineer table pipeline.
"""

import unittest
import math
import os
import shutil
import sys
import tempfile
from collections import Counter

import numpy as np
from scipy import ndimage

# Add project root to Python path
sys.path.insert(0, os.path.dirname(os.path.dirname(os.path.abspath(__file__))))

from src.core_model import (
    DimensionMismatchError,
    EmptyAnnulusError,
    GrayImage,
    OcclusionMask,
    write_image,
    write_mask,
)
from src.factors import (
    FactorEngineer,
    TABLE_COLUMNS,
    dilation,
    factor_report,
    gray_level_spread,
    iris_size,
    sharpness,
    usable_area,
)
from tests.fixtures import make_geometry, make_record

SOBEL_X = np.array([[-1, 0, 1], [-2, 0, 2], [-1, 0, 1]], dtype=np.float64)


def sharpness_oracle(pixels):
    """Double-loop Sobel magnitude with replicate padding."""
    padded = np.pad(pixels.astype(np.float64), 1, mode="edge")
    height, width = pixels.shape
    total = 0.0
    for y in range(height):
        for x in range(width):
            gx = gy = 0.0
            for i in range(3):
                for j in range(3):
                    value = padded[y + i, x + j]
                    gx += SOBEL_X[i, j] * value
                    gy += SOBEL_X.T[i, j] * value
            total += math.sqrt(gx * gx + gy * gy)
    return total / (height * width)


def entropy_oracle(values):
    counts = Counter(int(v) for v in values)
    n = sum(counts.values())
    return -sum((c / n) * math.log2(c / n) for c in counts.values())


class TestSharpness(unittest.TestCase):
    """Test cases for the Tenengrad sharpness factor."""

    def setUp(self):
        self.rng = np.random.default_rng(3)

    def test_constant_image(self):
        self.assertEqual(sharpness(GrayImage(np.full((16, 16), 128, dtype=np.uint8))), 0.0)

    def test_checkerboard_sharper_than_blurred(self):
        tiles = (np.indices((16, 16)) // 4).sum(axis=0) % 2
        board = (tiles * 255).astype(np.uint8)
        blurred = np.round(ndimage.uniform_filter(board.astype(np.float64), size=5, mode="nearest"))
        self.assertGreater(sharpness(GrayImage(board)), sharpness(GrayImage(blurred.astype(np.uint8))))

    def test_blur_lowers_texture_sharpness(self):
        for _ in range(5):
            texture = self.rng.integers(0, 256, size=(32, 32)).astype(np.float64)
            previous = sharpness(GrayImage(texture.astype(np.uint8)))
            for sigma in (0.5, 1.0, 2.0):
                blurred = np.round(ndimage.gaussian_filter(texture, sigma=sigma, mode="nearest")).astype(np.uint8)
                value = sharpness(GrayImage(blurred))
                self.assertLess(value, previous)
                previous = value

    def test_step_edge_equals_blurred_step(self):
        # Mean gradient magnitude of a monotone ramp depends only on the total rise
        step = np.zeros((16, 16), dtype=np.uint8)
        step[:, 8:] = 255
        blurred = np.round(ndimage.uniform_filter(step.astype(np.float64), size=5, mode="nearest"))
        self.assertAlmostEqual(sharpness(GrayImage(step)), sharpness(GrayImage(blurred.astype(np.uint8))),
                               delta=1e-9 * sharpness(GrayImage(step)))

    def test_matches_convolution_oracle(self):
        for _ in range(20):
            pixels = self.rng.integers(0, 256, size=(16, 16), dtype=np.uint8)
            expected = sharpness_oracle(pixels)
            self.assertAlmostEqual(sharpness(GrayImage(pixels)) / expected, 1.0, delta=1e-9)

    def test_translation_invariance(self):
        for _ in range(5):
            noise = self.rng.uniform(0, 255, size=(64, 64))
            pixels = np.round(ndimage.gaussian_filter(noise, sigma=2.0)).astype(np.uint8)
            shifted = np.pad(pixels, ((1, 0), (1, 0)), mode="edge")[:-1, :-1]
            base = sharpness(GrayImage(pixels))
            self.assertLess(abs(sharpness(GrayImage(shifted)) - base) / base, 0.05)


class TestGeometryFactors(unittest.TestCase):
    """Test cases for iris size and dilation."""

    def test_iris_size(self):
        self.assertEqual(iris_size(make_geometry(center=(80.0, 80.0), pupil_radius=30.0, iris_radius=60.0)), 60.0)
        self.assertEqual(iris_size(make_geometry(pupil_radius=0.5, iris_radius=1.0)), 1.0)

    def test_dilation(self):
        self.assertEqual(dilation(make_geometry(center=(80.0, 80.0), pupil_radius=30.0, iris_radius=60.0)), 0.5)
        self.assertAlmostEqual(dilation(make_geometry(center=(120.0, 120.0), pupil_radius=1.0, iris_radius=100.0)), 0.01)

    def test_dilation_scale_invariant(self):
        geometry = make_geometry(pupil_radius=7.0, iris_radius=19.0)
        for k in (0.5, 2.0, 3.7):
            self.assertAlmostEqual(dilation(geometry.scaled(k)), dilation(geometry), places=12)


class TestGrayLevelSpread(unittest.TestCase):
    """Test cases for the annulus entropy factor."""

    def setUp(self):
        self.rng = np.random.default_rng(11)
        self.geometry = make_geometry(center=(16.0, 16.0), pupil_radius=4.0, iris_radius=12.0)
        self.annulus = self.geometry.annulus(32, 32)

    def test_uniform_annulus(self):
        self.assertEqual(gray_level_spread(GrayImage(np.full((32, 32), 90, dtype=np.uint8)), self.geometry), 0.0)

    def test_two_levels_equal_counts(self):
        pixels = np.zeros((32, 32), dtype=np.uint8)
        rows, cols = np.nonzero(self.annulus)
        # Four-fold symmetric annulus, so the pixel count is even
        self.assertEqual(rows.size % 2, 0)
        pixels[rows[::2], cols[::2]] = 200
        pixels[rows[1::2], cols[1::2]] = 50
        self.assertAlmostEqual(gray_level_spread(GrayImage(pixels), self.geometry), 1.0, places=12)

    def test_matches_histogram_oracle(self):
        for _ in range(20):
            pixels = self.rng.integers(0, 256, size=(32, 32), dtype=np.uint8)
            expected = entropy_oracle(pixels[self.annulus])
            self.assertAlmostEqual(gray_level_spread(GrayImage(pixels), self.geometry), expected, delta=1e-9 * expected)

    def test_permutation_invariance(self):
        pixels = self.rng.integers(0, 256, size=(32, 32), dtype=np.uint8)
        lookup = self.rng.permutation(256).astype(np.uint8)
        self.assertAlmostEqual(
            gray_level_spread(GrayImage(lookup[pixels]), self.geometry),
            gray_level_spread(GrayImage(pixels), self.geometry),
            places=12,
        )

    def test_range(self):
        pixels = self.rng.integers(0, 256, size=(32, 32), dtype=np.uint8)
        value = gray_level_spread(GrayImage(pixels), self.geometry)
        self.assertGreaterEqual(value, 0.0)
        self.assertLessEqual(value, 8.0)

    def test_empty_annulus(self):
        geometry = make_geometry(center=(4.0, 4.0), pupil_radius=0.1, iris_radius=0.2)
        with self.assertRaises(EmptyAnnulusError):
            gray_level_spread(GrayImage(np.zeros((8, 8), dtype=np.uint8)), geometry)


class TestUsableArea(unittest.TestCase):
    """Test cases for the usable area factor."""

    def setUp(self):
        self.geometry = make_geometry(center=(32.0, 32.0), pupil_radius=8.0, iris_radius=24.0)
        self.annulus = self.geometry.annulus(64, 64)

    def test_full_and_empty(self):
        self.assertEqual(usable_area(OcclusionMask(np.ones((64, 64), dtype=bool)), self.geometry), 1.0)
        self.assertEqual(usable_area(OcclusionMask(np.zeros((64, 64), dtype=bool)), self.geometry), 0.0)

    def test_top_half_occluded(self):
        ys = np.arange(64)[:, None] + 0.5
        bits = self.annulus & (ys >= 32.0)
        self.assertAlmostEqual(usable_area(OcclusionMask(bits), self.geometry), 0.5,
                               delta=2.0 / self.geometry.iris_radius)

    def test_monotone_under_occlusion(self):
        rng = np.random.default_rng(5)
        bits = self.annulus.copy()
        previous = usable_area(OcclusionMask(bits), self.geometry)
        rows, cols = np.nonzero(bits)
        for k in rng.permutation(rows.size)[:200]:
            bits[rows[k], cols[k]] = False
            current = usable_area(OcclusionMask(bits), self.geometry)
            self.assertLessEqual(current, previous)
            previous = current


class TestFactorReport(unittest.TestCase):
    """Test cases for factor_report and the FactorEngineer."""

    def setUp(self):
        self.temp_dir = tempfile.mkdtemp()
        self.rng = np.random.default_rng(21)
        self.geometry = make_geometry(center=(32.0, 24.0), pupil_radius=6.0, iris_radius=16.0)

    def tearDown(self):
        shutil.rmtree(self.temp_dir, ignore_errors=True)

    def _write_sample(self, record):
        pixels = self.rng.integers(0, 256, size=(48, 64), dtype=np.uint8)
        write_image(GrayImage(pixels), os.path.join(self.temp_dir, record.image_path))
        write_mask(OcclusionMask(self.geometry.annulus(64, 48)), os.path.join(self.temp_dir, record.occlusion_path))

    def test_report_composition(self):
        image = GrayImage(self.rng.integers(0, 256, size=(48, 64), dtype=np.uint8))
        mask = OcclusionMask(self.geometry.annulus(64, 48))
        report = factor_report(image, self.geometry, mask)
        self.assertEqual(report.sharpness, sharpness(image))
        self.assertEqual(report.iris_size, 16.0)
        self.assertEqual(report.dilation, 6.0 / 16.0)
        self.assertEqual(report.gray_level_spread, gray_level_spread(image, self.geometry))
        self.assertEqual(report.usable_area, 1.0)

    def test_mask_size_mismatch(self):
        image = GrayImage(np.zeros((48, 64), dtype=np.uint8))
        with self.assertRaises(DimensionMismatchError):
            factor_report(image, self.geometry, OcclusionMask(np.zeros((48, 60), dtype=bool)))

    def test_engineer_table_and_annotation(self):
        records = [
            make_record(f"s{i}", f"c{i // 2}", self.rng.standard_normal(8), is_enrollment=i % 2 == 0,
                        geometry=self.geometry)
            for i in range(4)
        ]
        for record in records:
            self._write_sample(record)

        engineer = FactorEngineer(base_dir=self.temp_dir)
        table = engineer.build_table(records)
        self.assertEqual(list(table.columns), TABLE_COLUMNS)
        self.assertEqual(len(table), 4)
        self.assertTrue((table["usable_area"] == 1.0).all())

        annotated = engineer.annotate(records)
        self.assertEqual(sorted(annotated[0].factors), sorted(TABLE_COLUMNS[3:]))
        self.assertEqual(annotated[2].factors["sharpness"], table.loc[2, "sharpness"])

        threaded = FactorEngineer(base_dir=self.temp_dir, threads=2).build_table(records)
        self.assertTrue(threaded.equals(table))


if __name__ == '__main__':
    unittest.main()
