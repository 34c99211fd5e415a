"""Nakagami-m links, topology-derived mean gains and gain sampling."""

from dataclasses import dataclass
import math
import operator

from .special_math import regularized_lower_gamma, regularized_upper_gamma

__all__ = [
    "LinkSpec",
    "Topology",
    "NetworkLinks",
    "NODES",
    "MAX_CLOSED_FORM_ORDER",
    "gain_pdf",
    "gain_cdf",
    "sample_gain",
    "mean_gain_from_topology",
    "sinr_survival",
]

NODES = ("ST", "SR", "SD", "PT", "PD")

# combinatorial term counts in the closed forms grow quickly with m
MAX_CLOSED_FORM_ORDER = 8


@dataclass(frozen=True)
class LinkSpec:
    """One fading link.

    The channel power gain is Gamma distributed with integer shape ``m``
    and mean ``omega``; ``alpha = m / omega`` is the rate parameter.
    """

    m: int
    omega: float

    def __post_init__(self):
        try:
            m = operator.index(self.m)
        except TypeError:
            raise ValueError(f"fading parameter m must be an integer, got {self.m!r}") from None
        if m < 1:
            raise ValueError(f"fading parameter m must be >= 1, got {m}")
        omega = float(self.omega)
        if not (omega > 0.0 and math.isfinite(omega)):
            raise ValueError(f"mean channel gain must be positive and finite, got {self.omega!r}")
        object.__setattr__(self, "m", m)
        object.__setattr__(self, "omega", omega)

    @property
    def alpha(self):
        return self.m / self.omega


@dataclass(frozen=True)
class Topology:
    """2-D node placement (meters) and path-loss exponent.

    All relays share one location ``sr`` (collocated cluster).
    """

    st: tuple = (0.0, 0.0)
    sr: tuple = (50.0, 0.0)
    sd: tuple = (100.0, 0.0)
    pt: tuple = (50.0, 50.0)
    pd: tuple = (100.0, 50.0)
    path_loss_exponent: float = 4.0

    def __post_init__(self):
        for name in ("st", "sr", "sd", "pt", "pd"):
            xy = tuple(float(v) for v in getattr(self, name))
            if len(xy) != 2:
                raise ValueError(f"coordinate {name} must have two components, got {xy}")
            object.__setattr__(self, name, xy)
        if not self.path_loss_exponent > 0:
            raise ValueError(f"path-loss exponent must be positive, got {self.path_loss_exponent}")
        for a in NODES:
            for b in NODES:
                if a < b and self.distance(a, b) <= 0.0:
                    raise ValueError(f"nodes {a} and {b} are co-located")

    def position(self, node):
        key = str(node).upper()
        if key not in NODES:
            raise KeyError(f"unknown node {node!r}; expected one of {NODES}")
        return getattr(self, key.lower())

    def distance(self, a, b):
        return math.dist(self.position(a), self.position(b))


def mean_gain_from_topology(topology, node_a, node_b):
    """Mean channel power gain ``d**(-Delta)`` between two nodes."""
    return topology.distance(node_a, node_b) ** (-topology.path_loss_exponent)


@dataclass(frozen=True)
class NetworkLinks:
    """Link specs for every channel of the network.

    Relay links are identical across relays.
    """

    st_sr: LinkSpec
    sr_sd: LinkSpec
    pt_sr: LinkSpec
    pt_sd: LinkSpec
    st_pd: LinkSpec
    sr_pd: LinkSpec
    pt_pd: LinkSpec

    @classmethod
    def from_topology(cls, topology, m_f, m_int, m_pp=None):
        """Forward links use ``m_f``, the four cross-network links ``m_int``.

        The primary link PT->PD uses ``m_pp``, defaulting to ``m_f``.
        """
        if m_pp is None:
            m_pp = m_f

        def link(a, b, m):
            return LinkSpec(m, mean_gain_from_topology(topology, a, b))

        return cls(
            st_sr=link("ST", "SR", m_f),
            sr_sd=link("SR", "SD", m_f),
            pt_sr=link("PT", "SR", m_int),
            pt_sd=link("PT", "SD", m_int),
            st_pd=link("ST", "PD", m_int),
            sr_pd=link("SR", "PD", m_int),
            pt_pd=link("PT", "PD", m_pp),
        )


def gain_pdf(link, u):
    """Gamma density of the channel power gain."""
    u = float(u)
    if u < 0.0:
        return 0.0
    if u == 0.0:
        return link.alpha if link.m == 1 else 0.0
    m, a = link.m, link.alpha
    return math.exp(m * math.log(a) + (m - 1) * math.log(u) - a * u - math.lgamma(m))


def gain_cdf(link, u):
    """CDF of the channel power gain, ``P(m, alpha * u)``."""
    if u < 0:
        raise ValueError(f"gain must be nonnegative, got {u}")
    return regularized_lower_gamma(link.m, link.alpha * u)


def sample_gain(link, rng, size=None):
    """Draw channel power gains ``|h|**2 ~ Gamma(m, omega / m)``.

    ``rng`` is a :class:`numpy.random.Generator`; numpy's gamma sampler is
    exact (Marsaglia-Tsang), not a moment approximation.
    """
    return rng.gamma(link.m, link.omega / link.m, size=size)


def _check_closed_form_order(link, what):
    if link.m > MAX_CLOSED_FORM_ORDER:
        raise ValueError(
            f"{what} fading parameter m={link.m} exceeds the closed-form cap "
            f"{MAX_CLOSED_FORM_ORDER}"
        )


def sinr_survival(threshold, p_signal, signal, p_interferer, interferer, n0):
    """Closed-form ``Pr(p_s X / (p_i Y + n0) > threshold)``.

    ``X`` and ``Y`` are independent channel power gains on the ``signal``
    and ``interferer`` links.  Conditioning on ``Y`` turns the event into a
    Gamma CDF; with integer ``m`` that CDF is a finite exponential sum, and
    averaging each term over ``Y`` leaves a double finite sum with no
    special functions.  The CDF of the same SINR is ``1 - survival``.

    Parameters
    ----------
    threshold : float
        SINR threshold, ``>= 0``.
    p_signal, p_interferer : float
        Transmit powers in watts; ``p_signal > 0``, ``p_interferer >= 0``.
    signal, interferer : LinkSpec
    n0 : float
        Noise power in watts, ``> 0``.
    """
    if threshold < 0:
        raise ValueError(f"SINR threshold must be nonnegative, got {threshold}")
    if not p_signal > 0:
        raise ValueError(f"signal power must be positive, got {p_signal}")
    if p_interferer < 0:
        raise ValueError(f"interferer power must be nonnegative, got {p_interferer}")
    if not n0 > 0:
        raise ValueError(f"noise power must be positive, got {n0}")
    _check_closed_form_order(signal, "signal link")
    _check_closed_form_order(interferer, "interferer link")

    if threshold == 0:
        return 1.0
    beta = signal.alpha * threshold / p_signal
    noise_term = beta * n0
    if p_interferer == 0:
        return regularized_upper_gamma(signal.m, noise_term)

    mi, ai = interferer.m, interferer.alpha
    bi = beta * p_interferer
    log_noise = math.log(noise_term)
    log_frac = math.log(bi / (bi + ai))
    base = mi * math.log(ai / (ai + bi)) - noise_term
    terms = []
    for k in range(signal.m):
        for t in range(k + 1):
            log_term = (
                base
                + (k - t) * log_noise
                + t * log_frac
                + math.log(math.comb(k, t))
                - math.lgamma(k + 1)
                + math.lgamma(mi + t)
                - math.lgamma(mi)
            )
            terms.append(math.exp(log_term))
    return min(math.fsum(terms), 1.0)
