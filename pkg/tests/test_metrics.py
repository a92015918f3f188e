"""Tests for overlap, boundary-distance, and area metrics."""

import numpy as np
import pytest

from orthomem.errors import FormatError, UndefinedMetricError
from orthomem.metrics import (
    boundary_points,
    dice,
    ef_area,
    ef_stats,
    hd95,
    load_pgm,
    pgm_bytes,
    temporal_matching_error,
)


def mask_from_coords(shape, coords):
    m = np.zeros(shape, dtype=bool)
    for r, c in coords:
        m[r, c] = True
    return m


def boundary_oracle(mask):
    """Scalar-loop boundary extraction: 4-neighbour outside or image edge."""
    h, w = mask.shape
    pts = []
    for i in range(h):
        for j in range(w):
            if not mask[i, j]:
                continue
            on_edge = i == 0 or j == 0 or i == h - 1 or j == w - 1
            nb_out = any(
                not mask[i + di, j + dj]
                for di, dj in ((-1, 0), (1, 0), (0, -1), (0, 1))
                if 0 <= i + di < h and 0 <= j + dj < w
            )
            if on_edge or nb_out:
                pts.append((i, j))
    return pts


def percentile_linear(values, q):
    """Linear-interpolated percentile of a sorted multiset (order statistics).

    Same pinned expression as the implementation: rank position is
    (n - 1) * (q / 100), value is x[lo] + (x[hi] - x[lo]) * frac.
    """
    xs = sorted(values)
    if len(xs) == 1:
        return xs[0]
    pos = (len(xs) - 1) * (q / 100.0)
    lo = int(np.floor(pos))
    hi = int(np.ceil(pos))
    frac = pos - lo
    return xs[lo] + (xs[hi] - xs[lo]) * frac


def hd95_oracle(a, b, mode="pooled"):
    """Full O(n^2) all-pairs nearest-boundary-distance computation."""
    pa = boundary_oracle(a)
    pb = boundary_oracle(b)
    d_ab = [min(np.hypot(x - u, y - v) for (u, v) in pb) for (x, y) in pa]
    d_ba = [min(np.hypot(x - u, y - v) for (u, v) in pa) for (x, y) in pb]
    if mode == "pooled":
        return percentile_linear(d_ab + d_ba, 95.0)
    return max(percentile_linear(d_ab, 95.0), percentile_linear(d_ba, 95.0))


def random_mask(rng, shape=(32, 32), p=0.2):
    m = rng.random(shape) < p
    if not m.any():
        m[rng.integers(shape[0]), rng.integers(shape[1])] = True
    return m


class TestDice:
    def test_identical_nonempty(self):
        m = mask_from_coords((4, 4), [(1, 1), (2, 2)])
        assert dice(m, m) == 1.0

    def test_disjoint(self):
        a = mask_from_coords((4, 4), [(0, 0)])
        b = mask_from_coords((4, 4), [(3, 3)])
        assert dice(a, b) == 0.0

    def test_half_overlap(self):
        a = mask_from_coords((4, 4), [(0, 0), (0, 1)])
        b = mask_from_coords((4, 4), [(0, 1), (0, 2)])
        assert dice(a, b) == 0.5

    def test_empty_conventions(self):
        empty = np.zeros((3, 3), dtype=bool)
        full = mask_from_coords((3, 3), [(1, 1)])
        assert dice(empty, empty) == 1.0
        assert dice(empty, full) == 0.0

    def test_symmetry(self):
        rng = np.random.default_rng(0)
        a, b = random_mask(rng), random_mask(rng)
        assert dice(a, b) == dice(b, a)

    def test_shape_and_dtype_validation(self):
        with pytest.raises(ValueError, match="shapes differ"):
            dice(np.zeros((2, 2), bool), np.zeros((2, 3), bool))
        with pytest.raises(ValueError, match="boolean"):
            dice(np.zeros((2, 2)), np.zeros((2, 2)))


class TestBoundary:
    def test_matches_oracle(self):
        rng = np.random.default_rng(1)
        for _ in range(20):
            m = random_mask(rng, (16, 16), p=rng.uniform(0.05, 0.8))
            got = {tuple(p) for p in boundary_points(m)}
            assert got == set(boundary_oracle(m))

    def test_filled_square_boundary_is_ring(self):
        m = np.zeros((6, 6), dtype=bool)
        m[1:5, 1:5] = True
        pts = {tuple(p) for p in boundary_points(m)}
        assert (1, 1) in pts and (4, 4) in pts
        assert (2, 2) not in pts  # interior


class TestHd95:
    def test_identical_masks(self):
        m = mask_from_coords((8, 8), [(2, 2), (2, 3), (3, 2)])
        assert hd95(m, m) == 0.0

    def test_single_pixel_pair(self):
        a = mask_from_coords((5, 6), [(0, 0)])
        b = mask_from_coords((5, 6), [(3, 4)])
        assert hd95(a, b) == 5.0

    def test_matches_brute_force_exactly(self):
        rng = np.random.default_rng(2)
        for _ in range(30):
            a, b = random_mask(rng), random_mask(rng)
            assert hd95(a, b, mode="pooled") == hd95_oracle(a, b, "pooled")
            assert hd95(a, b, mode="max-directed") == hd95_oracle(a, b, "max-directed")

    def test_bounded_by_exact_hausdorff(self):
        rng = np.random.default_rng(3)
        for _ in range(20):
            a, b = random_mask(rng), random_mask(rng)
            pa = boundary_oracle(a)
            pb = boundary_oracle(b)
            d_ab = [min(np.hypot(x - u, y - v) for (u, v) in pb) for (x, y) in pa]
            d_ba = [min(np.hypot(x - u, y - v) for (u, v) in pa) for (x, y) in pb]
            exact_hd = max(max(d_ab), max(d_ba))
            assert hd95(a, b) <= exact_hd + 1e-12

    def test_symmetry(self):
        rng = np.random.default_rng(4)
        a, b = random_mask(rng), random_mask(rng)
        assert hd95(a, b) == hd95(b, a)

    def test_empty_mask_undefined(self):
        with pytest.raises(UndefinedMetricError):
            hd95(np.zeros((4, 4), bool), mask_from_coords((4, 4), [(0, 0)]))

    def test_spacing_scales(self):
        a = mask_from_coords((5, 6), [(0, 0)])
        b = mask_from_coords((5, 6), [(3, 4)])
        assert hd95(a, b, spacing=0.5) == 2.5

    def test_unknown_mode(self):
        m = mask_from_coords((4, 4), [(1, 1)])
        with pytest.raises(ValueError, match="mode"):
            hd95(m, m, mode="mean")


class TestEfArea:
    def test_appendix_fixture(self):
        assert ef_area(100.0, 40.0) == 0.6

    def test_no_contraction(self):
        assert ef_area(55.0, 55.0) == 0.0

    def test_complete_emptying(self):
        assert ef_area(70.0, 0.0) == 1.0

    def test_invalid_reference(self):
        with pytest.raises(ValueError):
            ef_area(0.0, 10.0)
        with pytest.raises(ValueError):
            ef_area(10.0, -1.0)

    def test_bounded_by_one_and_matches_complement_form(self):
        rng = np.random.default_rng(7)
        for _ in range(200):
            a = float(rng.uniform(1.0, 500.0))
            b = float(rng.uniform(0.0, 800.0))
            val = ef_area(a, b)
            assert val <= 1.0
            # identical up to rounding; tolerance scaled to the ratio since the
            # two forms cancel differently when a and b are close
            assert abs(val - (1.0 - b / a)) <= 1e-13 * max(1.0, b / a)


class TestEfStats:
    def test_identity_series(self):
        vals = [0.5, 0.6, 0.7]
        corr, bias, std = ef_stats(vals, vals)
        assert corr == 1.0 and bias == 0.0 and std == 0.0

    def test_perfect_anticorrelation(self):
        ref = np.array([-0.2, 0.0, 0.2])
        corr, _, _ = ef_stats(-ref, ref)
        assert abs(corr + 1.0) <= 1e-12

    def test_constant_offset(self):
        ref = np.array([0.1, 0.4, 0.9])
        corr, bias, std = ef_stats(ref + 2.0, ref)
        assert abs(corr - 1.0) <= 1e-12
        assert abs(bias - 2.0) <= 1e-12
        assert std <= 1e-12

    def test_constant_series_has_undefined_corr(self):
        corr, bias, std = ef_stats([1.0, 1.0, 1.0], [0.5, 0.6, 0.7])
        assert corr is None
        assert abs(bias - (1.0 - 0.6)) <= 1e-12
        assert std > 0.0

    def test_length_validation(self):
        with pytest.raises(ValueError):
            ef_stats([1.0], [1.0])
        with pytest.raises(ValueError):
            ef_stats([1.0, 2.0], [1.0, 2.0, 3.0])


class TestTemporalMatchingError:
    def test_identical_sequences(self):
        rng = np.random.default_rng(5)
        seq = [random_mask(rng, (8, 8)) for _ in range(4)]
        assert temporal_matching_error(seq, seq) == 0.0

    def test_constant_sequences(self):
        a = mask_from_coords((4, 4), [(0, 0), (1, 1)])
        b = mask_from_coords((4, 4), [(3, 3)])
        assert temporal_matching_error([a, a, a], [b, b, b]) == 0.0

    def test_hand_built_quarter(self):
        # pred dice chain [1.0, 0.5] vs ref chain [0.5, 0.5] -> mean gap 0.25
        grid = (1, 4)
        m0 = mask_from_coords(grid, [(0, 0), (0, 1)])
        m1 = mask_from_coords(grid, [(0, 0), (0, 1)])
        m2 = mask_from_coords(grid, [(0, 1), (0, 2)])
        g0 = mask_from_coords(grid, [(0, 0), (0, 1)])
        g1 = mask_from_coords(grid, [(0, 1), (0, 2)])
        g2 = mask_from_coords(grid, [(0, 2), (0, 3)])
        assert temporal_matching_error([m0, m1, m2], [g0, g1, g2]) == 0.25

    def test_length_mismatch(self):
        a = mask_from_coords((2, 2), [(0, 0)])
        with pytest.raises(ValueError, match="lengths differ"):
            temporal_matching_error([a, a], [a, a, a])

    def test_too_short(self):
        a = mask_from_coords((2, 2), [(0, 0)])
        with pytest.raises(ValueError, match="at least 2"):
            temporal_matching_error([a], [a])


class TestPgm:
    def test_round_trip(self, tmp_path):
        rng = np.random.default_rng(6)
        m = random_mask(rng, (11, 7))
        p = tmp_path / "m.pgm"
        p.write_bytes(pgm_bytes(m))
        assert np.array_equal(load_pgm(p), m)

    def test_comment_and_whitespace_header(self, tmp_path):
        payload = bytes([0, 200, 255, 10])
        blob = b"P5\n# a comment\n2 2\n# another\n255\n" + payload
        p = tmp_path / "c.pgm"
        p.write_bytes(blob)
        assert np.array_equal(load_pgm(p), [[False, True], [True, False]])

    def test_threshold_at_127(self, tmp_path):
        blob = b"P5\n2 1\n255\n" + bytes([127, 128])
        p = tmp_path / "t.pgm"
        p.write_bytes(blob)
        assert np.array_equal(load_pgm(p), [[False, True]])

    def test_rejects_wrong_magic(self, tmp_path):
        p = tmp_path / "x.pgm"
        p.write_bytes(b"P2\n2 2\n255\n0 0 0 0")
        with pytest.raises(FormatError, match="P5"):
            load_pgm(p)

    def test_rejects_wrong_maxval(self, tmp_path):
        p = tmp_path / "x.pgm"
        p.write_bytes(b"P5\n1 1\n100\n" + bytes([50]))
        with pytest.raises(FormatError, match="maxval"):
            load_pgm(p)

    def test_rejects_truncated_payload(self, tmp_path):
        p = tmp_path / "x.pgm"
        p.write_bytes(b"P5\n2 2\n255\n" + bytes([1, 2]))
        with pytest.raises(FormatError, match="payload"):
            load_pgm(p)
