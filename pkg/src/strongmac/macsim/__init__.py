"""Seeded Monte-Carlo simulation of the Gaussian MAC and interference channel."""

from .codebook import (
    DEFAULT_TUPLE_CAP,
    KINDS,
    Codebook,
    GaussianMacConfig,
    generate_codebook,
    sizes_from_rates,
)
from .decoder import MLDecoder
from .ic import (
    IcBaseDecoder,
    IcConfig,
    IcSimResult,
    KsResult,
    MulticastDecoders,
    anchor_errors,
    base_decoders,
    choose_anchors,
    ic_multicast_decoders,
    ks_identity_test,
    simulate_ic,
)
from .mac import (
    SCAN_HEADER,
    ScanRow,
    equal_rate_point,
    measure_error_profile,
    phase_transition_scan,
    run_mac_trials,
    sample_channel,
    simulate_mac_error,
)
from .stats import SimResult, wilson_interval

__all__ = [
    "DEFAULT_TUPLE_CAP",
    "KINDS",
    "SCAN_HEADER",
    "Codebook",
    "GaussianMacConfig",
    "IcBaseDecoder",
    "IcConfig",
    "IcSimResult",
    "KsResult",
    "MLDecoder",
    "MulticastDecoders",
    "ScanRow",
    "SimResult",
    "anchor_errors",
    "base_decoders",
    "choose_anchors",
    "equal_rate_point",
    "generate_codebook",
    "ic_multicast_decoders",
    "ks_identity_test",
    "measure_error_profile",
    "phase_transition_scan",
    "run_mac_trials",
    "sample_channel",
    "simulate_ic",
    "simulate_mac_error",
    "sizes_from_rates",
    "wilson_interval",
]
