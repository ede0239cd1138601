import math

import numpy as np
import pytest
import scipy.stats

from strataconf import (
    HeatmapBatch,
    PredictionSet,
    attention_report,
    point_biserial,
    read_gcam,
    spatial_entropy,
    spearman,
    write_gcam,
)
from strataconf.attention import student_t_sf2
from strataconf.errors import (
    CorrelationUndefined,
    DimensionError,
    EntropyUndefined,
    FormatError,
)


class TestSpatialEntropy:
    def test_uniform_map_is_maximal(self):
        assert spatial_entropy(np.ones((224, 224))) == pytest.approx(
            math.log2(224 * 224), abs=1e-9)

    def test_one_hot_is_zero(self):
        m = np.zeros((8, 8))
        m[3, 5] = 7.0
        assert spatial_entropy(m) == 0.0

    def test_two_pixel_hand_value(self):
        assert spatial_entropy(np.array([[3.0, 1.0]])) == pytest.approx(
            0.8112781244591328, abs=1e-12)

    def test_all_zero_undefined(self):
        with pytest.raises(EntropyUndefined):
            spatial_entropy(np.zeros((4, 4)))

    def test_scale_invariance(self, rng):
        m = rng.random((16, 16))
        assert spatial_entropy(m) == pytest.approx(spatial_entropy(1234.5 * m),
                                                   abs=1e-10)

    def test_bounded_by_log_pixels(self, rng):
        m = rng.random((10, 12))
        assert 0.0 <= spatial_entropy(m) <= math.log2(120)


class TestSpearman:
    def test_perfect_antimonotone(self):
        rho, p = spearman([1, 2, 3], [3, 2, 1])
        assert rho == -1.0
        assert p == 0.0

    def test_hand_ranked_four_points(self):
        rho, p = spearman([1, 2, 3, 4], [1, 3, 2, 4])
        assert rho == pytest.approx(0.8, abs=1e-12)
        assert 0.0 < p < 1.0

    def test_symmetric(self, rng):
        x = rng.random(30)
        y = rng.random(30)
        assert spearman(x, y) == spearman(y, x)

    def test_monotone_transform_invariance(self, rng):
        x = rng.standard_normal(50)
        y = rng.standard_normal(50)
        rho_raw, p_raw = spearman(x, y)
        rho_cubed, p_cubed = spearman(x ** 3, y)
        assert rho_cubed == pytest.approx(rho_raw, abs=1e-12)
        assert p_cubed == pytest.approx(p_raw, rel=1e-9)

    def test_constant_vector_undefined(self):
        with pytest.raises(CorrelationUndefined):
            spearman([1.0, 1.0, 1.0], [1, 2, 3])

    def test_matches_scipy_with_ties(self, rng):
        x = rng.random(200)
        y = np.round(rng.random(200) * 4)  # heavy small-integer ties
        rho, p = spearman(x, y)
        ref = scipy.stats.spearmanr(x, y)
        assert rho == pytest.approx(ref.statistic, abs=1e-12)
        assert p == pytest.approx(ref.pvalue, rel=1e-9)

    def test_p_decreasing_in_abs_rho(self):
        ps = []
        n = 40
        for target in (0.1, 0.3, 0.5, 0.7, 0.9):
            t = target * math.sqrt((n - 2) / (1 - target ** 2))
            ps.append(student_t_sf2(t, n - 2))
        assert ps == sorted(ps, reverse=True)

    def test_paper_scale_p_values(self):
        # magnitude sanity: at n=1000, |rho|=0.303 lands at ~1e-22 and
        # |r|=0.438 at ~1e-48 rather than underflowing or saturating
        t1 = 0.303 * math.sqrt(998 / (1 - 0.303 ** 2))
        assert 1e-24 < student_t_sf2(t1, 998) < 1e-21
        t2 = 0.438 * math.sqrt(998 / (1 - 0.438 ** 2))
        assert 1e-50 < student_t_sf2(t2, 998) < 1e-46


class TestPointBiserial:
    def test_equal_means_zero(self):
        x = np.array([1.0, 2.0, 1.0, 2.0])
        g = np.array([True, True, False, False])
        r, _ = point_biserial(x, g)
        assert r == pytest.approx(0.0, abs=1e-15)

    def test_hand_value_perfect_separation(self):
        r, p = point_biserial(np.array([0.0, 0.0, 1.0, 1.0]),
                              np.array([False, False, True, True]))
        assert r == pytest.approx(1.0)
        assert p == 0.0

    def test_single_group_undefined(self):
        with pytest.raises(CorrelationUndefined):
            point_biserial(np.array([1.0, 2.0, 3.0]), np.array([True, True, True]))

    def test_zero_variance_undefined(self):
        with pytest.raises(CorrelationUndefined):
            point_biserial(np.ones(4), np.array([True, False, True, False]))

    def test_matches_scipy(self, rng):
        x = rng.standard_normal(150)
        g = rng.random(150) < 0.4
        r, p = point_biserial(x, g)
        ref = scipy.stats.pointbiserialr(g, x)
        assert r == pytest.approx(ref.statistic, abs=1e-12)
        assert p == pytest.approx(ref.pvalue, rel=1e-9)

    def test_bounded(self, rng):
        for _ in range(50):
            x = rng.standard_normal(20)
            g = np.zeros(20, bool)
            g[: int(rng.integers(1, 19))] = True
            r, p = point_biserial(x, g)
            assert -1.0 <= r <= 1.0
            assert 0.0 <= p <= 1.0


class TestStudentTTail:
    def test_against_numeric_integration(self):
        # oracle: high-precision quadrature of the t density
        import mpmath
        mpmath.mp.dps = 60

        def oracle(t, df):
            c = mpmath.gamma((df + 1) / 2) / (
                mpmath.sqrt(df * mpmath.pi) * mpmath.gamma(df / 2))
            pdf = lambda u: c * (1 + u * u / df) ** (-(df + 1) / 2)
            return float(2 * mpmath.quad(pdf, [t, mpmath.inf]))

        pairs = [(0.5, 3), (1.0, 5), (2.0, 8), (2.5, 10), (3.0, 20), (1.5, 30),
                 (4.0, 50), (5.0, 50), (6.0, 100), (7.5, 100), (2.2, 200),
                 (8.0, 200), (10.0, 300), (3.3, 400), (11.0, 500), (9.0, 700),
                 (12.0, 800), (13.0, 998), (15.0, 998), (18.0, 998)]
        assert len(pairs) == 20
        for t, df in pairs:
            got = student_t_sf2(t, df)
            want = oracle(t, df)
            if want >= 1e-12:
                assert got == pytest.approx(want, rel=1e-6), (t, df)
            else:
                assert math.log(got) == pytest.approx(math.log(want), rel=0.01), (t, df)


class TestGcamFormat:
    def test_round_trip(self, tmp_path, rng):
        batch = HeatmapBatch(rng.random((5, 7, 9)).astype(np.float32))
        path = tmp_path / "maps.gcam"
        write_gcam(batch, path)
        back = read_gcam(path)
        assert back.count == 5 and back.height == 7 and back.width == 9
        assert np.array_equal(back.values, batch.values)

    def test_header_layout(self, tmp_path):
        batch = HeatmapBatch(np.ones((2, 3, 4), dtype=np.float32))
        path = tmp_path / "h.gcam"
        write_gcam(batch, path)
        blob = path.read_bytes()
        assert blob[:4] == b"GCAM"
        assert int.from_bytes(blob[4:8], "little") == 2
        assert int.from_bytes(blob[8:12], "little") == 3
        assert int.from_bytes(blob[12:16], "little") == 4
        assert len(blob) == 16 + 4 * 2 * 3 * 4

    def test_bad_magic(self, tmp_path):
        path = tmp_path / "bad.gcam"
        path.write_bytes(b"NOPE" + b"\x00" * 20)
        with pytest.raises(FormatError):
            read_gcam(path)

    def test_truncated_payload(self, tmp_path):
        batch = HeatmapBatch(np.ones((2, 3, 4), dtype=np.float32))
        path = tmp_path / "t.gcam"
        write_gcam(batch, path)
        path.write_bytes(path.read_bytes()[:-8])
        with pytest.raises(FormatError):
            read_gcam(path)

    def test_negative_values_rejected(self):
        with pytest.raises(ValueError):
            HeatmapBatch(np.full((1, 2, 2), -0.5))


class TestAttentionReport:
    def _maps(self, entropies_like):
        # one sharp pixel plus a pedestal: higher pedestal -> higher entropy
        maps = []
        for level in entropies_like:
            m = np.full((16, 16), float(level)) + 1e-9
            m[0, 0] = 100.0
            maps.append(m)
        return HeatmapBatch(np.stack(maps))

    def test_antimonotone_with_sizes(self):
        # dispersed attention pairs with small sets: entropy (low, mid, high)
        # against sizes (3, 2, 1) gives rho = -1 and a higher singleton mean
        maps = self._maps([1.0, 2.0, 3.0])
        sets = [PredictionSet.from_classes(0, (0, 1, 2), 0),
                PredictionSet.from_classes(1, (0, 1), 0),
                PredictionSet.from_classes(2, (0,), 0)]
        report = attention_report(maps, sets)
        assert report.spearman_rho == pytest.approx(-1.0)
        assert report.mean_entropy_singleton is not None
        assert report.mean_entropy_multi is not None
        assert report.mean_entropy_singleton > report.mean_entropy_multi

    def test_all_singletons_point_biserial_null(self):
        maps = self._maps([1.0, 2.0, 3.0])
        sets = [PredictionSet.from_classes(i, (i,), i) for i in range(3)]
        report = attention_report(maps, sets)
        assert report.point_biserial_r is None
        assert report.point_biserial_p is None
        assert report.spearman_rho is None  # sizes constant too
        assert report.mean_entropy_multi is None
        assert report.n_singleton == 3

    def test_count_mismatch(self):
        maps = self._maps([1.0, 2.0])
        with pytest.raises(DimensionError):
            attention_report(maps, [PredictionSet.from_classes(0, (0,), 0)])

    def test_group_means_partition(self, rng):
        maps = HeatmapBatch(rng.random((20, 8, 8)))
        sizes = [1] * 11 + [2] * 6 + [0] * 3
        sets = [PredictionSet.from_classes(i, tuple(range(s)), 0)
                for i, s in enumerate(sizes)]
        report = attention_report(maps, sets)
        assert report.n_singleton == 11
        assert report.n_multi == 6
        assert report.spearman_rho is not None
        assert report.point_biserial_r is not None
