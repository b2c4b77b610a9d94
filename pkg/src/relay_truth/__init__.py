"""Truthful (VCG/AGV) payment mechanisms for secure relay selection."""

__version__ = "0.1.0"

from .channels import (
    ChannelError,
    DirectLink,
    RelayChannel,
    db_to_linear,
    relay_secrecy_rate,
    system_secrecy_rate,
)
from .mechanisms import (
    GameSpec,
    MechanismError,
    MechanismResult,
    agv_expected_payoff,
    agv_phi,
    agv_transfer,
    baseline_expected_payoff,
    budget_balance,
    mechanism_result,
    utilities,
    vcg_expected,
    vcg_transfer_realized,
)
from .priors import McConfig, Prior, expect, sample_reports
from .selection import (
    ReportVector,
    SelectionError,
    SelectionOutcome,
    optimal_k_selection,
    secrecy_vs_k_sweep,
    select_top_k,
)

__all__ = [
    "ChannelError",
    "DirectLink",
    "GameSpec",
    "McConfig",
    "MechanismError",
    "MechanismResult",
    "Prior",
    "RelayChannel",
    "ReportVector",
    "SelectionError",
    "SelectionOutcome",
    "agv_expected_payoff",
    "agv_phi",
    "agv_transfer",
    "baseline_expected_payoff",
    "budget_balance",
    "db_to_linear",
    "expect",
    "mechanism_result",
    "optimal_k_selection",
    "relay_secrecy_rate",
    "sample_reports",
    "secrecy_vs_k_sweep",
    "select_top_k",
    "system_secrecy_rate",
    "utilities",
    "vcg_expected",
    "vcg_transfer_realized",
]
