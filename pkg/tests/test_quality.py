import math

import mpmath
import numpy as np
import pytest

from nvqrng.quality import (
    chi2_percentile,
    ent_report,
    pearson_lag,
    relative_frequency,
    unpack_bits,
)


class TestRelativeFrequency:
    def test_all_zero_bits(self):
        assert relative_frequency(b"\x00" * 100) == (1.0, 0.0)

    def test_alternating(self):
        f0, f1 = relative_frequency(b"\xaa" * 100)
        assert (f0, f1) == (0.5, 0.5)

    def test_sums_to_one(self):
        rng = np.random.default_rng(60)
        data = rng.integers(0, 256, size=10_000, dtype=np.uint8)
        f0, f1 = relative_frequency(data)
        assert f0 + f1 == 1.0

    def test_empty_rejected(self):
        with pytest.raises(ValueError):
            relative_frequency(b"")


class TestPearsonLag:
    def test_alternating_bits(self):
        data = b"\x55" * 1000  # 0101...
        lag = pearson_lag(data, 2)
        assert lag.coefficients[0] == pytest.approx(-1.0, abs=1e-12)
        assert lag.coefficients[1] == pytest.approx(+1.0, abs=1e-12)

    def test_random_bits_near_zero(self):
        rng = np.random.default_rng(61)
        data = rng.integers(0, 256, size=125_000, dtype=np.uint8)  # 1e6 bits
        lag = pearson_lag(data, 15)
        assert lag.max_abs() <= 4.9 / math.sqrt(1e6)

    def test_length_validation(self):
        with pytest.raises(ValueError):
            pearson_lag(b"\x00", 8)

    def test_unpack_is_msb_first(self):
        assert unpack_bits(b"\x80").tolist() == [1, 0, 0, 0, 0, 0, 0, 0]


class TestChi2Percentile:
    def test_zero_statistic(self):
        assert chi2_percentile(0.0, 255) == 0.0

    def test_two_dof_median(self):
        assert chi2_percentile(2 * math.log(2), 2) == pytest.approx(50.0, abs=1e-9)

    def test_far_tail(self):
        assert chi2_percentile(400.0, 255) > 99.99

    def test_statistic_at_dof_is_near_median(self):
        # the chi-square mean sits just above its median, so the value at
        # statistic == dof lands a hair over 51%
        assert chi2_percentile(255.0, 255) == pytest.approx(51.1777478, abs=1e-6)

    @pytest.mark.parametrize("dof,stat", [(2, 1.0), (10, 8.5), (255, 220.0), (255, 300.0)])
    def test_against_high_precision_oracle(self, dof, stat):
        oracle = float(mpmath.gammainc(dof / 2, 0, stat / 2, regularized=True)) * 100
        assert chi2_percentile(stat, dof) == pytest.approx(oracle, abs=1e-6)

    def test_domain(self):
        with pytest.raises(ValueError):
            chi2_percentile(-1.0, 2)
        with pytest.raises(ValueError):
            chi2_percentile(1.0, 0)


class TestEntReport:
    def test_perfectly_uniform_sample(self):
        data = bytes(range(256)) * 10
        report = ent_report(data)
        assert report.entropy_per_byte == 8.0
        assert report.chi2_statistic == 0.0
        assert report.chi2_percentile == 0.0
        assert report.arithmetic_mean == 127.5

    def test_constant_sample_degenerates(self):
        report = ent_report(b"\x00" * 4096)
        assert report.entropy_per_byte == 0.0
        assert report.arithmetic_mean == 0.0
        assert report.serial_correlation == 1.0
        assert report.degenerate

    def test_too_short_rejected(self):
        with pytest.raises(ValueError):
            ent_report(b"\x01\x02\x03")

    def test_random_sample_statistics(self):
        rng = np.random.default_rng(62)
        n = 10**6
        data = rng.integers(0, 256, size=n, dtype=np.uint8)
        report = ent_report(data)
        assert report.entropy_per_byte >= 8 - 5 * 255 / (2 * n * math.log(2))
        assert report.arithmetic_mean == pytest.approx(127.5, abs=5 * 73.9 / math.sqrt(n))
        assert abs(report.serial_correlation) < 5 / math.sqrt(n)
        assert report.monte_carlo_pi == pytest.approx(math.pi, abs=0.02)
        assert 0.01 < report.chi2_percentile < 99.99

    def test_entropy_permutation_invariant_but_order_statistics_not(self):
        rng = np.random.default_rng(63)
        data = rng.integers(0, 256, size=60_000, dtype=np.uint8)
        shuffled = data.copy()
        rng.shuffle(shuffled)
        a, b = ent_report(data), ent_report(shuffled)
        assert a.entropy_per_byte == b.entropy_per_byte
        assert a.chi2_statistic == b.chi2_statistic
        assert a.serial_correlation != b.serial_correlation
        assert a.monte_carlo_pi != b.monte_carlo_pi

    def test_entropy_deficit_matches_null_scale(self):
        n = 65536
        expected_deficit = 255 / (2 * n * math.log(2))
        for seed in range(100):
            rng = np.random.default_rng(1000 + seed)
            data = rng.integers(0, 256, size=n, dtype=np.uint8)
            deficit = 8.0 - ent_report(data).entropy_per_byte
            assert expected_deficit / 5 < deficit < 5 * expected_deficit

    def test_monte_carlo_pi_bit_exact_definition(self):
        # one group inside (origin), one outside (max radius corner)
        inside = bytes([0, 0, 0, 0, 0, 0])
        outside = bytes([255, 255, 255, 255, 255, 255])
        assert ent_report(inside * 2).monte_carlo_pi == 4.0
        # (2^24-1)^2 + (2^24-1)^2 > (2^24-1)^2
        assert ent_report(outside + inside).monte_carlo_pi == 2.0
        # trailing partial group ignored
        assert ent_report(inside + b"\xff" * 5).monte_carlo_pi == 4.0
