"""Closed-form secondary outage with best-relay selection among N active relays.

The relay-to-destination SINRs all share the PT->SD interference gain, so
they are dependent.  Conditioned on that gain ``x`` the relays are
independent and

    Pr(outage | x) = prod_i [1 - A * Q(m_rd, c (P_PT x + N0))],

with ``A`` the probability that a relay decodes, ``c = alpha_rd gamma / P_SR``
and ``Q`` the regularized upper gamma.  Expanding the N-th power with the
multinomial theorem and averaging over ``x`` gives a finite alternating sum,
implemented in :func:`secondary_outage_closed_form`.  The integral itself is
available through :func:`secondary_outage_quadrature` and is used whenever
the alternating sum loses too much precision.
"""

from collections import defaultdict
from dataclasses import dataclass
import math
import operator

from scipy.integrate import quad

from .channel import LinkSpec, MAX_CLOSED_FORM_ORDER, gain_pdf, sinr_survival
from .special_math import regularized_upper_gamma, signed_sum

__all__ = [
    "ClosedFormLimitError",
    "SecondaryScenario",
    "relay_decode_success",
    "conditional_outage_given_interference",
    "secondary_outage_closed_form",
    "secondary_outage_quadrature",
    "secondary_outage_given_n",
    "nonincreasing_chains",
    "MAX_ACTIVE_RELAYS",
    "CANCELLATION_RTOL",
]

MAX_ACTIVE_RELAYS = 16
CANCELLATION_RTOL = 1e-12


class ClosedFormLimitError(ValueError):
    """The multinomial expansion would exceed the supported size."""


@dataclass(frozen=True)
class SecondaryScenario:
    """Powers (W), SINR threshold and relay-side links of the secondary hop."""

    p_st: float
    p_sr: float
    p_pt: float
    n0: float
    gamma: float
    st_sr: LinkSpec
    sr_sd: LinkSpec
    pt_sr: LinkSpec
    pt_sd: LinkSpec

    def __post_init__(self):
        for name in ("p_st", "p_sr", "n0"):
            v = getattr(self, name)
            if not (v > 0 and math.isfinite(v)):
                raise ValueError(f"{name} must be positive and finite, got {v!r}")
        if not (self.p_pt >= 0 and math.isfinite(self.p_pt)):
            raise ValueError(f"p_pt must be nonnegative and finite, got {self.p_pt!r}")
        if not self.gamma >= 0:
            raise ValueError(f"gamma must be nonnegative, got {self.gamma!r}")

    @classmethod
    def from_links(cls, links, p_st, p_sr, p_pt, n0, gamma):
        return cls(p_st, p_sr, p_pt, n0, gamma, links.st_sr, links.sr_sd, links.pt_sr, links.pt_sd)


def _check_n(n):
    n = operator.index(n)
    if n < 1:
        raise ValueError(f"number of active relays must be >= 1, got {n}")
    return n


def relay_decode_success(scenario):
    """Probability ``A`` that a relay's SINR from ST exceeds ``gamma``."""
    s = scenario
    return sinr_survival(s.gamma, s.p_st, s.st_sr, s.p_pt, s.pt_sr, s.n0)


def conditional_outage_given_interference(scenario, n, x):
    """Outage with ``n`` active relays given ``|h_PT-SD|**2 = x``."""
    n = _check_n(n)
    if x < 0:
        raise ValueError(f"interference gain must be nonnegative, got {x}")
    s = scenario
    a = relay_decode_success(s)
    arg = s.sr_sd.alpha * s.gamma * (s.p_pt * x + s.n0) / s.p_sr
    per_relay = 1.0 - a * regularized_upper_gamma(s.sr_sd.m, arg)
    return per_relay**n


def nonincreasing_chains(n, length):
    """Yield every tuple ``n >= r_0 >= r_1 >= ... >= r_{length-1} >= 0``.

    Odometer enumeration: bump the rightmost position that still has room
    under its left neighbour and zero everything to its right.
    """
    r = [0] * length
    while True:
        yield tuple(r)
        i = length - 1
        while i >= 0 and r[i] >= (n if i == 0 else r[i - 1]):
            i -= 1
        if i < 0:
            return
        r[i] += 1
        for k in range(i + 1, length):
            r[k] = 0


def _chain_weights(n, m):
    """Positive multinomial weights grouped by ``(j, R)``.

    ``j`` counts relays contributing a decode-and-deliver factor and ``R`` is
    the total polynomial degree of the chain.
    """
    log_fact = [math.lgamma(k + 1) for k in range(m)]
    weights = defaultdict(list)
    for chain in nonincreasing_chains(n, m):
        prev = n
        coef = 1
        degree = 0
        log_inv_fact = 0.0
        for k, r in enumerate(chain):
            coef *= math.comb(prev, r)
            if k >= 1:
                degree += k * (prev - r)
                log_inv_fact -= (prev - r) * log_fact[k]
            prev = r
        j = n - chain[-1]
        weights[(j, degree)].append(coef * math.exp(log_inv_fact))
    return {key: math.fsum(v) for key, v in weights.items()}


def secondary_outage_closed_form(scenario, n):
    """Evaluate the alternating multinomial sum.

    Returns
    -------
    value : float
        The closed-form outage probability (not clipped).
    magnitude : float
        Sum of absolute term values, for judging cancellation.
    """
    n = _check_n(n)
    s = scenario
    m = s.sr_sd.m
    if n > MAX_ACTIVE_RELAYS:
        raise ClosedFormLimitError(f"N={n} exceeds the closed-form cap {MAX_ACTIVE_RELAYS}")
    if m > MAX_CLOSED_FORM_ORDER:
        raise ClosedFormLimitError(
            f"m_SR-SD={m} exceeds the closed-form cap {MAX_CLOSED_FORM_ORDER}"
        )
    if s.pt_sd.m > MAX_CLOSED_FORM_ORDER:
        raise ClosedFormLimitError(
            f"m_PT-SD={s.pt_sd.m} exceeds the closed-form cap {MAX_CLOSED_FORM_ORDER}"
        )

    a = relay_decode_success(s)
    c = s.sr_sd.alpha * s.gamma / s.p_sr
    cn = c * s.n0
    cp = c * s.p_pt
    mp, ap = s.pt_sd.m, s.pt_sd.alpha

    inner_cache = {}

    def inner(j, degree):
        # E_x[(1 + x P_PT / N0)**R exp(-c P_PT j x)] * (c N0)**R, expanded in p
        key = (j, degree)
        if key not in inner_cache:
            denom = ap + cp * j
            head = (ap / denom) ** mp
            ratio = cp / denom
            terms = [
                math.comb(degree, p)
                * cn ** (degree - p)
                * ratio**p
                * math.exp(math.lgamma(mp + p) - math.lgamma(mp))
                for p in range(degree + 1)
            ]
            inner_cache[key] = head * math.fsum(terms)
        return inner_cache[key]

    terms = []
    for (j, degree), w in _chain_weights(n, m).items():
        if j > 0 and a == 0.0:
            continue
        sign = -1.0 if j % 2 else 1.0
        terms.append(sign * w * a**j * math.exp(-cn * j) * inner(j, degree))
    return signed_sum(terms)


def _upper_limit(m, tail=1e-17):
    # smallest u (by doubling) with Q(m, u) below the tail bound
    u = max(1.0, float(m))
    while regularized_upper_gamma(m, u) > tail:
        u *= 2.0
    return u


def secondary_outage_quadrature(scenario, n, epsabs=1e-14, epsrel=1e-12):
    """Integrate the conditional outage against the PT->SD gain density."""
    n = _check_n(n)
    s = scenario
    ap = s.pt_sd.alpha
    # integrate over u = alpha * x; the integrand is bounded by the density
    u_max = _upper_limit(s.pt_sd.m)
    unit = LinkSpec(s.pt_sd.m, s.pt_sd.m)

    def f(u):
        return conditional_outage_given_interference(s, n, u / ap) * gain_pdf(unit, u)

    pts = [max(s.pt_sd.m - 1.0, 0.0)]
    cp = s.sr_sd.alpha * s.gamma * s.p_pt / s.p_sr
    if cp > 0:
        pts.append(ap / cp)
    pts = sorted(p for p in pts if 0.0 < p < u_max)
    val, _ = quad(f, 0.0, u_max, points=pts or None, epsabs=epsabs, epsrel=epsrel, limit=500)
    return min(max(val, 0.0), 1.0)


def secondary_outage_given_n(scenario, n, method="auto"):
    """Secondary outage probability with best-relay selection among ``n``.

    Parameters
    ----------
    scenario : SecondaryScenario
    n : int
        Number of active relays, ``1 <= n <= 16``.
    method : {"auto", "closed", "quadrature"}
        ``"auto"`` uses the closed form unless its alternating sum cancels
        below ``CANCELLATION_RTOL`` of its term magnitude, in which case
        the quadrature value is returned.
    """
    if method == "quadrature":
        return secondary_outage_quadrature(scenario, n)
    value, magnitude = secondary_outage_closed_form(scenario, n)
    if method == "closed":
        return min(max(value, 0.0), 1.0)
    if method != "auto":
        raise ValueError(f"unknown method {method!r}")
    if abs(value) < CANCELLATION_RTOL * magnitude:
        return secondary_outage_quadrature(scenario, n)
    return min(max(value, 0.0), 1.0)
