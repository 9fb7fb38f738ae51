import math

import numpy as np
import pytest

from nvqrng.entropy import (
    BinningConfig,
    bin_distribution,
    conditional_single_photon_bins,
    min_entropy,
    min_entropy_coherent,
)
from nvqrng.model import EmitterParams, FluxSpec, photon_number_single, region_preset

R1 = region_preset(1)
CFG = BinningConfig()


class TestBinningConfig:
    def test_default_preset(self):
        assert (CFG.period_ps, CFG.n_bins, CFG.bin_width_ps) == (12800, 256, 50)
        assert CFG.bits_per_symbol == 8

    @pytest.mark.parametrize("bins", [0, 1, 3, 100])
    def test_bins_must_be_power_of_two(self, bins):
        with pytest.raises(ValueError):
            BinningConfig(period_ps=12800, n_bins=bins)

    def test_period_must_divide(self):
        with pytest.raises(ValueError):
            BinningConfig(period_ps=12801, n_bins=256)


class TestBinDistribution:
    def test_vanishing_flux_is_uniform(self):
        d = bin_distribution(R1.params, FluxSpec(1e-14), CFG)
        assert np.max(np.abs(d.probabilities * CFG.n_bins - 1.0)) < 1e-6

    def test_region1_nearly_uniform(self):
        d = bin_distribution(R1.params, R1.flux, CFG)
        excess = d.max_probability * CFG.n_bins - 1.0
        assert 0.0 < excess < 5e-4  # visually flat at the 1e-4 level

    def test_geometric_ratio_constant(self):
        d = bin_distribution(R1.params, R1.flux, CFG)
        ratios = d.probabilities[1:] / d.probabilities[:-1]
        assert np.max(np.abs(ratios - ratios[0])) < 1e-12

    def test_first_bin_is_mode(self):
        for k in (1, 4, 5):
            preset = region_preset(k)
            d = bin_distribution(preset.params, preset.flux, CFG)
            assert d.max_probability == d.probabilities.max()

    def test_normalised(self):
        d = bin_distribution(R1.params, R1.flux, CFG)
        assert float(d.probabilities.sum()) == pytest.approx(1.0, abs=1e-12)


class TestMinEntropy:
    @pytest.mark.parametrize("region,tol", [(1, 2e-5), (2, 2e-5), (3, 2e-5), (4, 5e-5), (5, 5e-5)])
    def test_published_values(self, region, tol):
        preset = region_preset(region)
        h = min_entropy(preset.params, preset.flux, CFG)
        assert h == pytest.approx(preset.min_entropy_anchor, abs=tol)

    def test_vanishing_flux_is_ideal(self):
        assert min_entropy(R1.params, FluxSpec(1e-14), CFG) == pytest.approx(1.0, abs=1e-8)

    def test_never_exceeds_one(self):
        for lam in np.logspace(-6, -2.5, 12):
            assert min_entropy(R1.params, FluxSpec(lam), CFG) <= 1.0 + 1e-15

    def test_single_emitter_closed_form(self):
        # Eq. route through the photon-number probabilities directly:
        # H = -log_M((p1 + p2) / (1 - p0^M)), stable denominator
        d = photon_number_single(CFG.bin_width_ns, R1.flux, R1.params)
        s = d.p1 + d.p2
        log_p_first = math.log(s) - math.log(-math.expm1(CFG.n_bins * math.log1p(-s)))
        direct = -log_p_first / math.log(CFG.n_bins)
        assert min_entropy(R1.params, R1.flux, CFG) == pytest.approx(direct, abs=1e-12)

    def test_monotone_in_flux(self):
        hs = [min_entropy(R1.params, FluxSpec(l), CFG) for l in np.logspace(-6, -2.5, 50)]
        assert all(a >= b for a, b in zip(hs, hs[1:]))

    def test_monotone_in_emitters(self):
        hs = []
        for n in (1, 2, 4, 8, 16, 32):
            p = EmitterParams(n, R1.params.gamma1, R1.params.gamma2, R1.params.beta, R1.params.rho)
            hs.append(min_entropy(p, R1.flux, CFG))
        assert all(a >= b for a, b in zip(hs, hs[1:]))


class TestMinEntropyCoherent:
    def test_vanishing_flux_is_ideal(self):
        lam = 1e-9 / CFG.period_ns  # lambda*T = 1e-9
        assert min_entropy_coherent(lam, CFG) == pytest.approx(1.0, abs=1e-9)

    def test_close_to_single_emitter_at_region1_flux(self):
        h_single = min_entropy(R1.params, R1.flux, CFG)
        h_coh = min_entropy_coherent(R1.flux.lambda_per_emitter, CFG)
        assert h_coh == pytest.approx(h_single, abs=1e-5)

    def test_monotone_decreasing_in_flux(self):
        hs = [min_entropy_coherent(l, CFG) for l in np.logspace(-6, -2, 100)]
        assert all(a > b for a, b in zip(hs, hs[1:]))

    def test_rejects_nonpositive_flux(self):
        with pytest.raises(ValueError):
            min_entropy_coherent(0.0, CFG)


class TestConditionalUniformity:
    def test_spec_values(self):
        d = conditional_single_photon_bins(0.9, 0.05, 16)
        assert np.max(np.abs(d.probabilities - 0.0625)) < 1e-12
        d2 = conditional_single_photon_bins(0.5, 0.5, 2)
        assert tuple(d2.probabilities) == (0.5, 0.5)

    def test_randomised_inputs_always_uniform(self):
        rng = np.random.default_rng(20240831)
        worst = 0.0
        for _ in range(1000):
            p_empty = rng.uniform(0.01, 0.99)
            p_one = rng.uniform(1e-6, 1.0 - p_empty)
            m = int(rng.integers(2, 65))
            d = conditional_single_photon_bins(p_empty, p_one, m)
            worst = max(worst, float(np.max(np.abs(d.probabilities - 1.0 / m))))
        assert worst < 1e-12

    @pytest.mark.parametrize("p_empty", [0.0, 1.0])
    def test_degenerate_rejected(self, p_empty):
        with pytest.raises(ValueError):
            conditional_single_photon_bins(p_empty, 0.01, 8)

    def test_inconsistent_pair_rejected(self):
        with pytest.raises(ValueError):
            conditional_single_photon_bins(0.9, 0.2, 8)
