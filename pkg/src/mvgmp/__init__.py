"""Multi-view 3D video multicast in a WiFi cell: closed-form erasure
analytics, the MVGMP group-management protocol, and a frame-stepped
simulator with a comparison baseline."""

__version__ = "0.1.0"

from .model import (
    APTransmissionDistribution,
    Subscription,
    SynthesisConfig,
    TransmissionPlan,
    UserChannelState,
    combined_loss_prob_randomized,
    combined_view_loss_prob,
)
from .analytics import (
    AlphaResult,
    ZipfPeriodicSubscription,
    alpha_asymptotic_spaced,
    alpha_asymptotic_uniform,
    alpha_asymptotic_zipf_consecutive,
    expected_alpha_exact,
    view_failure_prob,
)

__all__ = [
    "APTransmissionDistribution",
    "AlphaResult",
    "Subscription",
    "SynthesisConfig",
    "TransmissionPlan",
    "UserChannelState",
    "ZipfPeriodicSubscription",
    "alpha_asymptotic_spaced",
    "alpha_asymptotic_uniform",
    "alpha_asymptotic_zipf_consecutive",
    "combined_loss_prob_randomized",
    "combined_view_loss_prob",
    "expected_alpha_exact",
    "view_failure_prob",
]
