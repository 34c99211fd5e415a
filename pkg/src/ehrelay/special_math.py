"""Integer-order incomplete gamma functions and combinatorial helpers.

Every closed form in the package is a finite sum because the Nakagami
fading parameters are restricted to positive integers.  The regularized
lower and upper incomplete gamma functions are therefore evaluated from
the same truncated exponential series,

    Q(a, x) = exp(-x) * sum_{k=0}^{a-1} x**k / k!,     P(a, x) = 1 - Q(a, x),

which makes ``P + Q == 1`` hold exactly in floating point.
"""

import math
import operator

__all__ = [
    "regularized_lower_gamma",
    "regularized_upper_gamma",
    "binomial",
    "log_factorial",
    "signed_sum",
    "MAX_EXACT_BINOMIAL_N",
]

MAX_EXACT_BINOMIAL_N = 62


def _check_order(a):
    try:
        a = operator.index(a)
    except TypeError:
        raise ValueError(f"gamma order must be a positive integer, got {a!r}") from None
    if a < 1:
        raise ValueError(f"gamma order must be a positive integer, got {a}")
    return a


def _check_argument(x):
    x = float(x)
    if not x >= 0.0:  # also catches NaN
        raise ValueError(f"gamma argument must be nonnegative, got {x!r}")
    return x


def _upper_series(a, x):
    if x == 0.0:
        return 1.0
    if math.isinf(x):
        return 0.0
    # log-space terms keep exp(-x) * x**k / k! finite for large x
    log_x = math.log(x)
    terms = [math.exp(k * log_x - x - math.lgamma(k + 1)) for k in range(a)]
    return min(math.fsum(terms), 1.0)


def regularized_upper_gamma(a, x):
    """Regularized upper incomplete gamma ``Gamma(a, x) / Gamma(a)``.

    Parameters
    ----------
    a : int
        Positive integer order.
    x : float
        Nonnegative argument.

    Returns
    -------
    float
        Value in ``[0, 1]``.

    Raises
    ------
    ValueError
        If ``a`` is not a positive integer or ``x`` is negative.
    """
    return _upper_series(_check_order(a), _check_argument(x))


def regularized_lower_gamma(a, x):
    """Regularized lower incomplete gamma ``gamma(a, x) / Gamma(a)``.

    Computed as the exact complement of :func:`regularized_upper_gamma`.
    This is also the CDF of a unit-rate Gamma variable of shape ``a``.
    """
    return 1.0 - _upper_series(_check_order(a), _check_argument(x))


def binomial(n, k):
    """Exact binomial coefficient ``C(n, k)`` for ``0 <= k <= n <= 62``.

    Larger ``n`` raises :class:`OverflowError` instead of silently losing
    exactness once the value is converted to a float downstream.
    """
    n = operator.index(n)
    k = operator.index(k)
    if n < 0 or k < 0 or k > n:
        raise ValueError(f"binomial requires 0 <= k <= n, got n={n}, k={k}")
    if n > MAX_EXACT_BINOMIAL_N:
        raise OverflowError(
            f"binomial({n}, {k}) exceeds the exact range n <= {MAX_EXACT_BINOMIAL_N}"
        )
    return math.comb(n, k)


def log_factorial(n):
    """Natural log of ``n!`` for a nonnegative integer ``n``."""
    n = operator.index(n)
    if n < 0:
        raise ValueError(f"log_factorial requires n >= 0, got {n}")
    return math.lgamma(n + 1)


def signed_sum(terms):
    """Sum terms of mixed sign with positive/negative buckets.

    Each bucket is accumulated with :func:`math.fsum` and the two are
    subtracted once at the end.

    Returns
    -------
    total : float
        The sum.
    magnitude : float
        Sum of absolute values, used to judge relative cancellation.
    """
    pos = []
    neg = []
    for t in terms:
        if t >= 0.0:
            pos.append(t)
        else:
            neg.append(-t)
    p = math.fsum(pos)
    q = math.fsum(neg)
    return p - q, p + q
