"""Time-of-arrival quantum random number generation with three-level emitters.

Simulates detected-photon timestamp streams for clusters of single-photon
emitters with background and detector imperfections, extracts random bytes
from periodic arrival-time bins, evaluates the theoretical bin probabilities
and min-entropy, reconstructs and fits g2(tau), and scores output randomness.
"""

from .entropy import (
    BinDistribution,
    BinningConfig,
    bin_distribution,
    conditional_single_photon_bins,
    min_entropy,
    min_entropy_coherent,
)
from .estimator import (
    FitError,
    FitResult,
    G2Histogram,
    average_histograms,
    estimate_rho,
    fit_g2,
    g2_histogram,
    hbt_split,
)
from .extractor import ExtractionResult, extract, throughput
from .model import (
    REGIONS,
    EmitterParams,
    FluxSpec,
    ModelRegimeError,
    PhotonNumberDist,
    RegionPreset,
    g2_detected_zero,
    g2_model,
    photon_number_multi,
    photon_number_single,
    region_preset,
)
from .quality import (
    EntReport,
    LagCorrelations,
    chi2_percentile,
    ent_report,
    pearson_lag,
    relative_frequency,
    unpack_bits,
)
from .simulator import (
    RESOLUTION_PS,
    CtmcRates,
    DetectorModel,
    InfeasibleRatesError,
    TimestampStream,
    calibrate_rates,
    censor_dead_time,
    ctmc_g2,
    ctmc_g2_params,
    simulate_emitter,
    simulate_hbt_pair,
    simulate_poisson,
    simulate_region,
    thin,
)

__version__ = "0.1.0"
