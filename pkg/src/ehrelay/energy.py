"""Relay activity, selection probability and the combined power rule."""

from dataclasses import dataclass
import math
import operator

from .special_math import binomial

__all__ = [
    "EnergyParams",
    "selection_probability",
    "relay_active_probability",
    "effective_relay_power",
    "energy_unconstrained",
    "binomial_weights",
    "aggregate_outage",
    "locate_tipping_point",
]


@dataclass(frozen=True)
class EnergyParams:
    """Harvesting rate ``h_av`` (J/s), relay count and slot duration (s)."""

    h_av: float
    m_relays: int
    slot_duration: float = 1.0

    def __post_init__(self):
        if not (self.h_av >= 0 and math.isfinite(self.h_av)):
            raise ValueError(f"h_av must be nonnegative and finite, got {self.h_av!r}")
        m = operator.index(self.m_relays)
        if m < 1:
            raise ValueError(f"relay count must be >= 1, got {m}")
        object.__setattr__(self, "m_relays", m)
        if not self.slot_duration > 0:
            raise ValueError(f"slot duration must be positive, got {self.slot_duration!r}")

    @property
    def unconstrained_power(self):
        """Largest relay power that keeps every relay always active, ``2 M H_av``."""
        return 2.0 * self.m_relays * self.h_av


def _check_power(p_sr):
    if not p_sr > 0:
        raise ValueError(f"relay transmit power must be positive, got {p_sr!r}")


def energy_unconstrained(params, p_sr):
    """True when harvesting covers consumption, i.e. ``p_sr <= 2 M H_av``."""
    _check_power(p_sr)
    return p_sr <= params.unconstrained_power


def selection_probability(params, p_sr, full_output=False):
    """Per-relay selection probability ``2 H_av / P_SR`` clamped to ``[0, 1]``.

    With ``full_output`` the energy-unconstrained flag is returned as well.
    """
    _check_power(p_sr)
    omega = min(2.0 * params.h_av / p_sr, 1.0)
    if full_output:
        return omega, energy_unconstrained(params, p_sr)
    return omega


def relay_active_probability(params, p_sr):
    """Probability that a relay holds enough energy to forward.

    ``eta = 1 - [(1 - M * omega)^+]^(1/M)``; exactly 1 for
    ``p_sr <= 2 M H_av`` and strictly decreasing beyond.
    """
    if energy_unconstrained(params, p_sr):
        return 1.0
    m = params.m_relays
    deficit = 1.0 - m * 2.0 * params.h_av / p_sr
    return 1.0 - deficit ** (1.0 / m)


def effective_relay_power(params, p_sr):
    """Relay power satisfying both constraints, ``min(2 M H_av, P_SR)``."""
    return min(params.unconstrained_power, p_sr)


def binomial_weights(m, eta):
    """``[C(m, n) eta**n (1 - eta)**(m - n) for n in 0..m]``."""
    if not 0.0 <= eta <= 1.0:
        raise ValueError(f"eta must lie in [0, 1], got {eta}")
    return [binomial(m, n) * eta**n * (1.0 - eta) ** (m - n) for n in range(m + 1)]


def aggregate_outage(m, eta, outage_by_n):
    """Secondary outage averaged over the number of active relays.

    Parameters
    ----------
    m : int
        Total relay count.
    eta : float
        Per-relay activity probability.
    outage_by_n : mapping
        ``{n: P_out given n active}`` for ``n = 1..m``.  With no active
        relay the outage is 1.
    """
    weights = binomial_weights(m, eta)
    terms = [weights[0]]
    for n in range(1, m + 1):
        if weights[n] == 0.0:
            continue
        terms.append(weights[n] * outage_by_n[n])
    return min(max(math.fsum(terms), 0.0), 1.0)


def locate_tipping_point(thetas, etas):
    """First outage cap at which relays become energy constrained.

    Returns ``None`` when ``eta == 1`` across the whole grid.
    """
    for theta, eta in zip(thetas, etas):
        if eta < 1.0:
            return theta
    return None
