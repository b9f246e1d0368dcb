"""Device-independent detector-efficiency bounds from Bell-violation data."""

from .analytic import Q_PR, eta_ns, noisy_eberhard_ns_mixture, p_ns, verify_proposition1
from .behavior import (
    Behavior,
    Correlators,
    DomainError,
    EberhardCoefficients,
    NoiseParams,
    NsDecomposition,
    SignalingError,
    apply_detection_noise,
    behavior_from_correlators,
    check_no_signaling,
    chsh_value,
    correlators_from_behavior,
    eberhard_coefficients,
    eberhard_from_chsh,
    eberhard_value,
    ld_distribution,
    ns_mixture,
    observed_eberhard,
    pr_box,
    uniform_behavior,
)
from .npa import (
    MomentStructure,
    build_moment_structure,
    eberhard_coefficient_functionals,
    max_noisy_eberhard_sdp,
    min_efficiency_npa,
    probability_functional,
    sdp_interchange,
)
from .quantum import (
    ETA_THRESHOLD,
    Q_MAX_VIOLATION,
    BisectionResult,
    InfeasibleViolationError,
    QuantumRealization,
    SearchConfig,
    born_rule_oracle,
    max_noisy_eberhard,
    min_efficiency_qr,
    realization_probabilities,
)
from .sdp import DenseSdp, SdpSolution, dense_sdp_from_interchange, solve_sdp

__version__ = "0.1.0"
