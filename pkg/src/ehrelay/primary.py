"""Primary-user outage under secondary interference and power inversion."""

from dataclasses import dataclass
import math

from .channel import LinkSpec, sinr_survival
from .energy import effective_relay_power

__all__ = [
    "InfeasibleConstraintError",
    "PrimaryScenario",
    "PowerBudget",
    "rate_threshold",
    "primary_outage",
    "solve_max_power",
    "solve_power_budget",
    "DEFAULT_POWER_BRACKET",
]

DEFAULT_POWER_BRACKET = 1.0e4


class InfeasibleConstraintError(ValueError):
    """The primary outage cap is violated even with a silent secondary."""

    def __init__(self, floor, cap):
        self.floor = floor
        self.cap = cap
        super().__init__(
            f"infeasible: primary outage with no secondary interference is "
            f"{floor:.6g}, above the cap {cap:.6g}"
        )


def rate_threshold(rate, uses=1):
    """SINR threshold ``2**(uses * rate) - 1`` for a target rate in bits/s/Hz.

    ``uses=2`` accounts for the two half-duplex phases of relayed traffic.
    """
    return math.expm1(uses * rate * math.log(2.0))


@dataclass(frozen=True)
class PrimaryScenario:
    """Primary link PT->PD and one secondary interferer at PD.

    Attributes
    ----------
    p_pt : float
        Primary transmit power (W).
    n0 : float
        Noise power (W).
    theta_p : float
        Primary SINR threshold, ``2**R_p - 1``.
    link_pp : LinkSpec
        PT->PD.
    link_ip : LinkSpec
        Interferer->PD (ST->PD in phase 1, SR->PD in phase 2).
    """

    p_pt: float
    n0: float
    theta_p: float
    link_pp: LinkSpec
    link_ip: LinkSpec

    def __post_init__(self):
        for name in ("p_pt", "n0", "theta_p"):
            v = getattr(self, name)
            if not (v > 0 and math.isfinite(v)):
                raise ValueError(f"{name} must be positive and finite, got {v!r}")


@dataclass(frozen=True)
class PowerBudget:
    """Solved secondary transmit powers (W) for one primary outage cap."""

    p_st: float
    p_sr: float
    effective_p_sr: float
    st_saturated: bool = False
    sr_saturated: bool = False

    def __post_init__(self):
        if min(self.p_st, self.p_sr, self.effective_p_sr) < 0:
            raise ValueError("powers must be nonnegative")
        if self.effective_p_sr > self.p_sr:
            raise ValueError("effective relay power cannot exceed p_sr")


def primary_outage(scenario, p_interferer):
    """Primary outage probability ``Pr(log2(1 + SINR_PD) <= R_p)``.

    Strictly increasing in ``p_interferer``; at zero interference it reduces
    to the Gamma CDF of the primary link at ``theta_p * n0 / p_pt``.
    """
    s = scenario
    return 1.0 - sinr_survival(s.theta_p, s.p_pt, s.link_pp, p_interferer, s.link_ip, s.n0)


def solve_max_power(
    scenario,
    theta_outage_cap,
    p_upper_bracket=DEFAULT_POWER_BRACKET,
    rtol=1e-9,
    full_output=False,
):
    """Largest interferer power keeping the primary outage at or below a cap.

    Bisection on ``[0, p_upper_bracket]``; the lower end is always feasible
    and the upper end infeasible, so the returned power satisfies the cap.

    Parameters
    ----------
    scenario : PrimaryScenario
    theta_outage_cap : float
        Primary outage threshold in ``(0, 1)``.
    p_upper_bracket : float
        Largest power considered (W).
    rtol : float
        Relative tolerance on the bracket width.
    full_output : bool
        Also return whether the bracket saturated.

    Returns
    -------
    power : float
    saturated : bool
        Only when ``full_output`` is true.  ``True`` means even
        ``p_upper_bracket`` meets the cap and was returned as is.

    Raises
    ------
    InfeasibleConstraintError
        If the interference-free primary outage already exceeds the cap.
    """
    if not 0.0 < theta_outage_cap < 1.0:
        raise ValueError(f"outage cap must lie in (0, 1), got {theta_outage_cap}")
    if not p_upper_bracket > 0:
        raise ValueError(f"power bracket must be positive, got {p_upper_bracket}")

    def done(p, saturated=False):
        return (p, saturated) if full_output else p

    floor = primary_outage(scenario, 0.0)
    if floor > theta_outage_cap:
        raise InfeasibleConstraintError(floor, theta_outage_cap)
    if floor == theta_outage_cap:
        return done(0.0)
    if primary_outage(scenario, p_upper_bracket) <= theta_outage_cap:
        return done(float(p_upper_bracket), True)

    lo, hi = 0.0, float(p_upper_bracket)
    for _ in range(2000):
        if hi - lo <= rtol * hi:
            break
        mid = 0.5 * (lo + hi)
        if primary_outage(scenario, mid) <= theta_outage_cap:
            lo = mid
        else:
            hi = mid
    return done(lo)


def solve_power_budget(
    links,
    p_pt,
    n0,
    theta_p,
    theta_outage_cap,
    energy,
    p_upper_bracket=DEFAULT_POWER_BRACKET,
):
    """Max ST and relay powers for one outage cap, plus the min-rule power.

    Parameters
    ----------
    links : NetworkLinks
    p_pt, n0 : float
        Primary power and noise power (W).
    theta_p : float
        Primary SINR threshold.
    theta_outage_cap : float
        Primary outage cap.
    energy : EnergyParams
        Used for ``min(2 M H_av, P_SR)``.
    """
    st = PrimaryScenario(p_pt, n0, theta_p, links.pt_pd, links.st_pd)
    sr = PrimaryScenario(p_pt, n0, theta_p, links.pt_pd, links.sr_pd)
    p_st, st_sat = solve_max_power(st, theta_outage_cap, p_upper_bracket, full_output=True)
    p_sr, sr_sat = solve_max_power(sr, theta_outage_cap, p_upper_bracket, full_output=True)
    return PowerBudget(
        p_st=p_st,
        p_sr=p_sr,
        effective_p_sr=effective_relay_power(energy, p_sr),
        st_saturated=st_sat,
        sr_saturated=sr_sat,
    )
