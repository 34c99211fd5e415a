"""Outage analysis of energy-harvesting decode-and-forward cognitive relays in Nakagami-m fading."""

from .channel import (
    LinkSpec,
    NetworkLinks,
    Topology,
    gain_cdf,
    gain_pdf,
    mean_gain_from_topology,
    sample_gain,
)
from .config import ConfigError, SystemConfig, load_config
from .energy import (
    EnergyParams,
    aggregate_outage,
    effective_relay_power,
    locate_tipping_point,
    relay_active_probability,
    selection_probability,
)
from .primary import (
    InfeasibleConstraintError,
    PowerBudget,
    PrimaryScenario,
    primary_outage,
    rate_threshold,
    solve_max_power,
    solve_power_budget,
)
from .secondary import (
    ClosedFormLimitError,
    SecondaryScenario,
    conditional_outage_given_interference,
    relay_decode_success,
    secondary_outage_given_n,
)
from .simulator import OutageEstimate, run_primary_sim, run_secondary_sim, run_sweep

__version__ = "0.1.0"

__all__ = [
    "ConfigError",
    "SystemConfig",
    "load_config",
    "LinkSpec",
    "NetworkLinks",
    "Topology",
    "gain_cdf",
    "gain_pdf",
    "mean_gain_from_topology",
    "sample_gain",
    "EnergyParams",
    "aggregate_outage",
    "effective_relay_power",
    "locate_tipping_point",
    "relay_active_probability",
    "selection_probability",
    "InfeasibleConstraintError",
    "PowerBudget",
    "PrimaryScenario",
    "primary_outage",
    "rate_threshold",
    "solve_max_power",
    "solve_power_budget",
    "ClosedFormLimitError",
    "SecondaryScenario",
    "conditional_outage_given_interference",
    "relay_decode_success",
    "secondary_outage_given_n",
    "OutageEstimate",
    "run_primary_sim",
    "run_secondary_sim",
    "run_sweep",
]
