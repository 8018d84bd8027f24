"""Special-function kernel.

Exact evaluators plus the finite-series approximations that the closed-form
metrics are built from. Every finite series is evaluated in log space with
sign tracking: the Gamma(order+idx) series weights overflow double precision
long before the assembled series value does.

Conventions: ``mode="exact"`` selects the reference evaluator and
``mode="truncated"`` (``mode="series"`` for the log-moment) the finite form
whose depth is set by a truncation order. Arguments are scalars unless a
docstring says otherwise.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

EULER_GAMMA = 0.5772156649015328606065
LN2 = math.log(2.0)

# ln of the largest representable double, rounded down.
_LOG_HUGE = 709.0
# Values whose log exceeds this would round past 1/1e-300.
_LOG_FLOOR_RECIP = 690.7


class SeriesOverflowError(OverflowError):
    """A function value left the representable range."""


@dataclass(frozen=True)
class TruncationOrders:
    """Depths of the three finite-series approximations used by the metrics.

    ``D`` truncates the first Marcum Q expansion, ``R`` the Bessel-I kernel of
    the connection series, ``Q`` the Bessel-I kernel of the leakage series.
    """

    D: int = 25
    R: int = 25
    Q: int = 25

    def __post_init__(self) -> None:
        if min(self.D, self.R, self.Q) < 1:
            raise ValueError(f"truncation orders must be >= 1, got {self}")


# ---------------------------------------------------------------------------
# log-space primitives

_LGAMMA_TABLE = np.array([math.inf, 0.0, 0.0])


def lgamma_int(n_max: int) -> np.ndarray:
    """Table t with t[k] = ln Gamma(k) for k = 0..n_max (t[0] = +inf)."""
    global _LGAMMA_TABLE
    if n_max >= _LGAMMA_TABLE.size:
        t = np.empty(n_max + 1)
        t[0] = math.inf
        for k in range(1, n_max + 1):
            t[k] = math.lgamma(k)
        _LGAMMA_TABLE = t
    return _LGAMMA_TABLE


def log_binomial(n: int, k) -> np.ndarray:
    """ln C(n, k) for integer 0 <= k <= n; k may be an integer array."""
    t = lgamma_int(n + 2)
    k = np.asarray(k)
    return t[n + 1] - t[k + 1] - t[n - k + 1]


def signed_logsumexp(log_mag, signs) -> tuple[float, float]:
    """Return (log|S|, sign(S)) for S = sum(signs * exp(log_mag)).

    Entries with log magnitude -inf are neutral. The sum is shifted by the
    largest magnitude, so cancellation costs precision but never overflows.
    """
    log_mag = np.asarray(log_mag, dtype=float)
    signs = np.asarray(signs, dtype=float)
    if log_mag.size == 0:
        return (-math.inf, 0.0)
    if np.isnan(log_mag).any():
        raise ValueError("NaN log magnitude in signed_logsumexp")
    m = float(np.max(log_mag))
    if m == -math.inf:
        return (-math.inf, 0.0)
    total = float(np.sum(signs * np.exp(log_mag - m)))
    if total == 0.0:
        return (-math.inf, 0.0)
    return (m + math.log(abs(total)), math.copysign(1.0, total))


def logsumexp(log_mag) -> float:
    """log(sum(exp(log_mag))) for all-positive terms."""
    value, _ = signed_logsumexp(log_mag, np.ones(np.shape(log_mag)))
    return value


def log_series_weight(order: int, idx) -> np.ndarray:
    """ln of the truncation weight Gamma(order+idx) * order^(1-2 idx) / Gamma(order-idx+1).

    ``idx`` may be an integer array with 0 <= idx <= order. The weight tends
    to 1 for idx << order; it is what ties the finite series to the exact
    transcendental as the order grows.
    """
    if order < 1:
        raise ValueError(f"series order must be >= 1, got {order}")
    idx = np.asarray(idx)
    if np.any(idx < 0) or np.any(idx > order):
        raise ValueError("series index outside [0, order]")
    t = lgamma_int(2 * order + 1)
    return t[order + idx] + (1 - 2 * idx) * math.log(order) - t[order - idx + 1]


# ---------------------------------------------------------------------------
# fixed-panel Gauss-Legendre quadrature (reference integrals)

_GL_NODES: dict[int, tuple[np.ndarray, np.ndarray]] = {}


def _gl_rule(n: int) -> tuple[np.ndarray, np.ndarray]:
    if n not in _GL_NODES:
        _GL_NODES[n] = np.polynomial.legendre.leggauss(n)
    return _GL_NODES[n]


def panel_quadrature(f, edges, points: int = 32) -> float:
    """Integrate a vectorized callable over consecutive [edges[i], edges[i+1]] panels."""
    x, w = _gl_rule(points)
    edges = np.asarray(edges, dtype=float)
    total = 0.0
    for a, b in zip(edges[:-1], edges[1:]):
        half = 0.5 * (b - a)
        mid = 0.5 * (b + a)
        total += half * float(np.sum(w * f(mid + half * x)))
    return total


def _dyadic_edges(upper: float, splits: int = 54) -> np.ndarray:
    """Panel edges 0, upper/2^splits, ..., upper/2, upper.

    Geometric refinement toward zero keeps a logarithmic endpoint singularity
    analytic on every interior panel.
    """
    return np.concatenate(([0.0], upper * 2.0 ** np.arange(-splits, 1.0)))


# ---------------------------------------------------------------------------
# modified Bessel I

def bessel_i(nu: float, x: float, mode: str = "exact", order: int | None = None) -> float:
    """Modified Bessel function of the first kind, order nu >= 0, x >= 0.

    Exact mode sums the ascending series adaptively. Truncated mode (order-0
    only) evaluates the finite surrogate of depth ``order`` that the metric
    series inherit their weights from.
    """
    if nu < 0 or x < 0:
        raise ValueError(f"bessel_i requires nu >= 0 and x >= 0, got nu={nu}, x={x}")
    if mode == "exact":
        return _bessel_i_exact(nu, x)
    if mode == "truncated":
        if nu != 0:
            raise ValueError("truncated mode is defined for order nu = 0 only")
        if order is None:
            raise ValueError("truncated mode needs an order")
        return _bessel_i0_truncated(x, order)
    raise ValueError(f"unknown bessel_i mode {mode!r}")


def _bessel_i_exact(nu: float, x: float) -> float:
    if x > _LOG_HUGE:
        raise SeriesOverflowError(f"bessel_i({nu}, {x}) exceeds double range")
    half = 0.5 * x
    if half == 0.0:  # includes denormals whose half underflows
        return 1.0 if nu == 0 else 0.0
    term = math.exp(nu * math.log(half) - math.lgamma(nu + 1.0))
    total = term
    q = half * half
    for k in range(1, 20000):
        term *= q / (k * (nu + k))
        total += term
        if term < 1e-17 * total and k > half:
            return total
    raise RuntimeError("bessel_i series failed to converge")


def _bessel_i0_truncated(x: float, order: int) -> float:
    if x == 0.0:
        return 1.0
    t = lgamma_int(2 * order + 2)
    r = np.arange(order + 1)
    log_terms = log_series_weight(order, r) - 2.0 * t[r + 1] + 2.0 * r * math.log(0.5 * x)
    log_value = logsumexp(log_terms)
    if log_value > _LOG_HUGE:
        raise SeriesOverflowError(f"truncated I0({x}) exceeds double range")
    return math.exp(log_value)


# ---------------------------------------------------------------------------
# modified Bessel K (integer and half-integer order)

def _k0_k1_small(x: float) -> tuple[float, float]:
    """Ascending series for K0 and K1, reliable for 0 < x <= 2."""
    q = 0.25 * x * x
    lh = math.log(0.5 * x)
    # K0 = -(ln(x/2) + gamma) I0 + sum_{k>=1} H_k q^k / (k!)^2
    i0 = _bessel_i_exact(0.0, x)
    i1 = _bessel_i_exact(1.0, x)
    s0 = 0.0
    term = 1.0
    h = 0.0
    for k in range(1, 400):
        term *= q / (k * k)
        h += 1.0 / k
        contrib = term * h
        s0 += contrib
        if contrib < 1e-18 * (abs(s0) + 1.0):
            break
    k0 = -(lh + EULER_GAMMA) * i0 + s0
    # K1 = ln(x/2) I1 + 1/x - (x/4) sum_{k>=0} [psi(k+1)+psi(k+2)] q^k / (k! (k+1)!)
    s1 = 0.0
    term = 1.0
    for k in range(0, 400):
        psi_sum = 2.0 * _harmonic(k) + 1.0 / (k + 1) - 2.0 * EULER_GAMMA
        contrib = term * psi_sum
        s1 += contrib
        if abs(contrib) < 1e-18 * (abs(s1) + 1.0) and k > 2:
            break
        term *= q / ((k + 1) * (k + 2))
    k1 = lh * i1 + 1.0 / x - 0.25 * x * s1
    return k0, k1


def _harmonic(k: int) -> float:
    return sum(1.0 / j for j in range(1, k + 1))


def _k_cosh_integral(nu: float, x: float) -> float:
    """K_nu(x) = integral_0^inf exp(-x cosh t) cosh(nu t) dt, for 2 < x <= 600.

    The integrand is even and analytic, so the trapezoid rule converges
    geometrically in the step size.
    """
    t_max = math.acosh(1.0 + 746.0 / x)
    h = 1.0 / 128.0
    n = int(t_max / h) + 2
    t = h * np.arange(n + 1)
    vals = np.exp(-x * np.cosh(t)) * np.cosh(nu * t)
    vals[0] *= 0.5
    return h * float(np.sum(vals))


def _log_k_asymptotic(nu: float, x: float) -> float:
    """ln K_nu(x) from the large-argument expansion; needs x >> nu^2.

    exp(-x) underflows past x ~ 745, so the direct integral cannot reach
    this regime; the expansion is already at machine precision by x = 600.
    """
    mu4 = 4.0 * nu * nu
    term = 1.0
    total = 1.0
    for k in range(1, 24):
        term *= (mu4 - (2.0 * k - 1.0) ** 2) / (8.0 * k * x)
        total += term
        if abs(term) < 1e-18 * abs(total):
            break
    return 0.5 * math.log(math.pi / (2.0 * x)) - x + math.log(total)


def log_bessel_k_sequence(nu_max: int, x: float, half_shift: bool = False) -> np.ndarray:
    """ln K_nu(x) for nu = 0..nu_max (or nu = 1/2..nu_max+1/2 when shifted).

    Upward recurrence in log space: the linear recurrence overflows near
    nu ~ 50 for small arguments while the log form cannot.
    """
    if x <= 0:
        raise ValueError(f"bessel_k requires x > 0, got {x}")
    out = np.empty(nu_max + 1)
    if half_shift:
        # K_{1/2} has a closed form; K_{3/2} = K_{1/2} (1 + 1/x).
        out[0] = 0.5 * math.log(math.pi / (2.0 * x)) - x
        if nu_max >= 1:
            out[1] = out[0] + math.log1p(1.0 / x)
        lo = 0.5
    else:
        if x <= 2.0:
            k0, k1 = _k0_k1_small(x)
            out[0] = math.log(k0)
            if nu_max >= 1:
                out[1] = math.log(k1)
        elif x <= 600.0:
            out[0] = math.log(_k_cosh_integral(0.0, x))
            if nu_max >= 1:
                out[1] = math.log(_k_cosh_integral(1.0, x))
        else:
            out[0] = _log_k_asymptotic(0.0, x)
            if nu_max >= 1:
                out[1] = _log_k_asymptotic(1.0, x)
        lo = 0.0
    for v in range(1, nu_max):
        # K_{v+1} = (2v/x) K_v + K_{v-1}, folded into logs.
        ratio = out[v - 1] - out[v]
        out[v + 1] = out[v] + math.log(2.0 * (lo + v) / x + math.exp(ratio))
    return out


def bessel_k(nu: float, x: float) -> float:
    """Modified Bessel function of the second kind for integer or half-integer order."""
    two_nu = 2.0 * abs(nu)
    if abs(two_nu - round(two_nu)) > 1e-12:
        raise ValueError(f"bessel_k supports integer and half-integer orders, got {nu}")
    v = abs(nu)  # K is even in its order
    if x <= 0:
        raise ValueError(f"bessel_k requires x > 0, got {x}")
    if round(two_nu) % 2 == 0:
        seq = log_bessel_k_sequence(int(round(v)), x)
        log_val = seq[int(round(v))]
    else:
        idx = int(round(v - 0.5))
        seq = log_bessel_k_sequence(idx, x, half_shift=True)
        log_val = seq[idx]
    if log_val > _LOG_FLOOR_RECIP:
        raise SeriesOverflowError(
            f"bessel_k({nu}, {x}) exceeds 1e300; evaluate in log space instead"
        )
    return math.exp(log_val)


# ---------------------------------------------------------------------------
# first-order Marcum Q

def marcum_q1(a: float, b, mode: str = "exact", order: int | None = None):
    """First-order Marcum Q function Q1(a, b).

    Exact mode sums the Poisson mixture Q1 = sum_k P[N_a = k] P[N_b <= k]
    with N_a ~ Poisson(a^2/2), N_b ~ Poisson(b^2/2); both factors update in
    O(1) and every term is positive. ``b`` may be an array in exact mode.
    Truncated mode evaluates the finite double series of depth ``order``.
    """
    if a < 0:
        raise ValueError(f"marcum_q1 requires a >= 0, got a={a}")
    if mode == "exact":
        return _marcum_q1_exact(a, b)
    if mode == "truncated":
        if order is None:
            raise ValueError("truncated mode needs an order")
        return _marcum_q1_truncated(a, float(b), order)
    raise ValueError(f"unknown marcum_q1 mode {mode!r}")


def _marcum_q1_exact(a: float, b):
    scalar = np.isscalar(b)
    y = np.atleast_1d(np.asarray(b, dtype=float))
    if np.any(y < 0):
        raise ValueError("marcum_q1 requires b >= 0")
    ha = 0.5 * a * a
    if ha > 700.0:
        raise SeriesOverflowError(
            f"marcum_q1 exact mode underflows for a^2/2 = {ha:.3g} > 700"
        )
    hy = 0.5 * y * y
    # t = Poisson pmf of N_b at k, g = its CDF; p = Poisson pmf of N_a at k.
    t = np.exp(-hy)
    g = t.copy()
    p = math.exp(-ha)
    cum_p = p
    q = p * g
    k = 0
    while cum_p < 1.0 - 1e-16 and k < 100000:
        k += 1
        t *= hy / k
        g += t
        p *= ha / k
        cum_p += p
        q += p * g
    # remaining Poisson mass multiplies CDF values <= 1; cum_p itself can
    # round a few ulp past 1, which must not drag q below 0
    q = np.minimum(q + max(1.0 - cum_p, 0.0), 1.0)
    return float(q[0]) if scalar else q


def _marcum_q1_truncated(a: float, b: float, order: int) -> float:
    if b < 0:
        raise ValueError("marcum_q1 requires b >= 0")
    t = lgamma_int(2 * order + 2)
    expo = -0.5 * (a * a + b * b)
    log_terms = []
    d_top = 0 if a == 0.0 else order
    for d in range(d_top + 1):
        w_d = t[order + d] + (1 - 2 * d) * math.log(order) - t[order - d + 1] - t[d + 1]
        u_top = 0 if b == 0.0 else d
        for u in range(u_top + 1):
            lt = w_d - t[u + 1] - (d + u) * LN2 + expo
            if d:
                lt += 2.0 * d * math.log(a)
            if u:
                lt += 2.0 * u * math.log(b)
            log_terms.append(lt)
    return math.exp(logsumexp(log_terms))


# ---------------------------------------------------------------------------
# gamma family

def gamma(x: float) -> float:
    """Gamma function (poles at non-positive integers raise ValueError)."""
    return math.gamma(x)


def log_gamma(x: float) -> float:
    """ln |Gamma(x)|, the primitive behind every series weight."""
    return math.lgamma(x)


def digamma(x: float) -> float:
    """Psi function for x > 0: recurrence shift into the asymptotic region."""
    if x <= 0:
        raise ValueError(f"digamma requires x > 0, got {x}")
    acc = 0.0
    while x < 12.0:
        acc -= 1.0 / x
        x += 1.0
    inv2 = 1.0 / (x * x)
    tail = math.log(x) - 0.5 / x - inv2 * (
        1.0 / 12.0
        - inv2
        * (
            1.0 / 120.0
            - inv2 * (1.0 / 252.0 - inv2 * (1.0 / 240.0 - inv2 * (1.0 / 132.0 - inv2 * 691.0 / 32760.0)))
        )
    )
    return acc + tail


def upper_incomplete_gamma(a: int, x: float) -> float:
    """Gamma(a, x) for integer a >= 1 via the finite exponential-sum form."""
    return math.exp(log_upper_incomplete_gamma(a, x))


def log_upper_incomplete_gamma(a: int, x: float) -> float:
    """ln Gamma(a, x), integer a >= 1, x >= 0; stable for large x."""
    if a < 1 or a != int(a):
        raise ValueError(f"integer a >= 1 required, got {a}")
    if x < 0:
        raise ValueError(f"x >= 0 required, got {x}")
    a = int(a)
    t = lgamma_int(a + 1)
    if x == 0.0:
        return t[a]
    k = np.arange(a)
    return t[a] - x + logsumexp(k * math.log(x) - t[k + 1])


# ---------------------------------------------------------------------------
# exponential integral E1

def exp_integral_e1(x: float) -> float:
    """E1(x) for x > 0; underflows to 0.0 past x ~ 745."""
    value = log_exp_integral_e1(x)
    return math.exp(value) if value > -745.0 else 0.0


def log_exp_integral_e1(x: float) -> float:
    """ln E1(x); remains finite for arguments far beyond the linear range."""
    if x <= 0:
        raise ValueError(f"exp_integral_e1 requires x > 0, got {x}")
    if x <= 1.5:
        total = -EULER_GAMMA - math.log(x)
        term = 1.0
        for k in range(1, 200):
            term *= -x / k
            total -= term / k
            if abs(term) < 1e-18 * k:
                break
        return math.log(total)
    return -x - math.log(_e1_continued_fraction(x))


def _e1_continued_fraction(x: float) -> float:
    """f with E1(x) = exp(-x)/f, by the modified Lentz algorithm."""
    tiny = 1e-300
    f = x + 1.0
    c = f
    d = 0.0
    for n in range(1, 500):
        a_n = -n * n
        b_n = x + 2.0 * n + 1.0
        d = b_n + a_n * d
        if d == 0.0:
            d = tiny
        c = b_n + a_n / c
        if c == 0.0:
            c = tiny
        d = 1.0 / d
        delta = c * d
        f *= delta
        if abs(delta - 1.0) < 1e-16:
            return f
    return f


# ---------------------------------------------------------------------------
# Whittaker M (first kind, second index zero)

def whittaker_m(kappa: float, mu: float, x: float) -> float:
    """Whittaker M function; only the mu = 0 branch is supported.

    M(kappa, 0, x) = exp(-x/2) sqrt(x) 1F1(1/2 - kappa; 1; x). When
    1/2 - kappa is a positive integer n the confluent series collapses to
    exp(x) times a degree n-1 polynomial, which is the case the leakage
    series consumes.
    """
    if mu != 0.0:
        raise ValueError("whittaker_m is implemented for mu = 0 only")
    if x <= 0:
        raise ValueError(f"whittaker_m requires x > 0, got {x}")
    a = 0.5 - kappa
    if a > 0 and abs(a - round(a)) < 1e-12:
        return math.exp(log_whittaker_m_neg_half(int(round(a)) - 1, x))
    if x > 600.0:
        raise SeriesOverflowError("whittaker_m argument too large for linear evaluation")
    term = 1.0
    total = 1.0
    for k in range(0, 10000):
        term *= (a + k) * x / ((k + 1.0) * (k + 1.0))
        total += term
        if abs(term) < 1e-17 * abs(total) and k > x:
            break
    return math.exp(-0.5 * x) * math.sqrt(x) * total


def log_whittaker_m_neg_half(r: int, x: float) -> float:
    """ln M(-(r+1/2), 0, x) for integer r >= 0 and x > 0.

    Uses 1F1(r+1; 1; x) = exp(x) sum_{k<=r} C(r,k) x^k / k!, a finite sum.
    """
    if r < 0:
        raise ValueError(f"r >= 0 required, got {r}")
    if x <= 0:
        raise ValueError(f"x > 0 required, got {x}")
    t = lgamma_int(r + 2)
    k = np.arange(r + 1)
    poly = logsumexp(log_binomial(r, k) + k * math.log(x) - t[k + 1])
    return 0.5 * x + 0.5 * math.log(x) + poly


# ---------------------------------------------------------------------------
# the log-weighted tail integral (a Meijer G special case)

def meijer_g_3023(j: int, x: float, mode: str = "closed") -> float:
    """integral_x^inf t^j exp(-t) ln(t/x) dt for integer j >= 0, x > 0.

    Closed mode uses j! (E1(x) + sum_{k=1..j} Gamma(k,x)/k!); quadrature mode
    integrates directly and exists as an independent cross-check.
    """
    if j < 0 or j != int(j):
        raise ValueError(f"integer j >= 0 required, got {j}")
    if x <= 0:
        raise ValueError(f"x > 0 required, got {x}")
    if mode == "closed":
        return math.exp(log_meijer_g_3023(j, x))
    if mode == "quadrature":
        return _meijer_quadrature(int(j), x)
    raise ValueError(f"unknown meijer_g_3023 mode {mode!r}")


def log_meijer_g_3023(j: int, x: float) -> float:
    t = lgamma_int(j + 2)
    parts = [log_exp_integral_e1(x)]
    for k in range(1, int(j) + 1):
        parts.append(log_upper_incomplete_gamma(k, x) - t[k + 1])
    return t[j + 1] + logsumexp(parts)


def _meijer_quadrature(j: int, x: float) -> float:
    def f(s):
        # t = x + s keeps the log factor analytic at the lower limit
        return (x + s) ** j * np.exp(-(x + s)) * np.log1p(s / x)

    upper = 60.0 + x + 4.0 * j * (1.0 + math.log1p(j + x))
    return panel_quadrature(f, _dyadic_edges(upper, splits=50), points=32)


# ---------------------------------------------------------------------------
# Lemma machinery: E[ln(X + b)] for X ~ noncentral chi-square, 2 dof

def log_moment_ncx2(lam: float, b: float, mode: str = "series", order: int = 25):
    """E[ln(X + b)] where X is noncentral chi-square with 2 degrees of
    freedom and noncentrality lam >= 0, and b >= 0 is a constant offset.

    Series mode evaluates the finite form of depth ``order`` used by the rate
    lower bound; quadrature mode integrates the density directly and is the
    reference the series is validated against.
    """
    if lam < 0 or b < 0:
        raise ValueError(f"lam >= 0 and b >= 0 required, got lam={lam}, b={b}")
    if mode == "quadrature":
        return _log_moment_quadrature(lam, b)
    if mode != "series":
        raise ValueError(f"unknown log_moment_ncx2 mode {mode!r}")
    if b == 0.0:
        return _g1_series(lam, order)
    return _g2_series(lam, b, order)


def _log_moment_quadrature(lam: float, b: float) -> float:
    upper = (math.sqrt(lam) + 14.0) ** 2

    def f(x):
        x = np.asarray(x)
        dens = 0.5 * np.exp(-0.5 * (x + lam))
        if lam > 0:
            arg = np.sqrt(lam * x)
            bess = np.array([_bessel_i_exact(0.0, float(v)) for v in arg])
            dens = dens * bess
        return np.log(x + b) * dens

    return panel_quadrature(f, _dyadic_edges(upper, splits=54), points=32)


def _g1_series(lam: float, order: int) -> float:
    """Finite form of E[ln X]; every term is positive."""
    t = lgamma_int(2 * order + 2)
    r_top = 0 if lam == 0.0 else order
    log_terms = np.empty(r_top + 1)
    signs_scale = np.empty(r_top + 1)
    for r in range(r_top + 1):
        coeff = digamma(r + 1.0) + LN2
        lt = log_series_weight(order, r) - t[r + 1] - r * LN2 + math.log(coeff)
        if r:
            lt += r * math.log(lam)
        log_terms[r] = lt
        signs_scale[r] = 1.0
    value, sign = signed_logsumexp(log_terms, signs_scale)
    return sign * math.exp(value - 0.5 * lam)


def _g2_series(lam: float, b: float, order: int) -> float:
    t = lgamma_int(2 * order + 2)
    r_top = 0 if lam == 0.0 else order
    phis = _phi_eq_log_bracket(r_top, b)
    log_terms = np.empty(r_top + 1)
    signs = np.empty(r_top + 1)
    for r in range(r_top + 1):
        phi = phis[r]
        if phi == 0.0:
            log_terms[r] = -math.inf
            signs[r] = 0.0
            continue
        lt = (
            log_series_weight(order, r)
            - 2.0 * t[r + 1]
            - r * 2.0 * LN2
            + math.log(abs(phi))
        )
        if r:
            lt += r * math.log(lam)
        log_terms[r] = lt
        signs[r] = math.copysign(1.0, phi)
    value, sign = signed_logsumexp(log_terms, signs)
    return sign * math.exp(value - 0.5 * lam)


def phi_log_bracket(i: int, b: float, mode: str = "closed") -> float:
    """Phi(i, b) = (1/2) integral_0^inf x^i ln(x+b) exp(-x/2) dx, b > 0.

    The closed form expands the binomial (x + b - b)^i and pairs each power
    with the log-weighted tail integral; it cancels catastrophically for
    large b, so the double-precision path monitors the cancellation and a
    fixed-point fallback re-evaluates when too many digits are lost.
    """
    if i < 0 or i != int(i):
        raise ValueError(f"integer i >= 0 required, got {i}")
    if b <= 0:
        raise ValueError(f"b > 0 required, got {b}")
    if mode == "closed":
        return _phi_eq_log_bracket(int(i), b)[int(i)]
    if mode == "quadrature":
        def f(x):
            return 0.5 * x**i * np.log(x + b) * np.exp(-0.5 * x)

        # the x^i factor pushes mass far beyond the exponential scale
        upper = 2.0 * (i + 1) + 24.0 * math.sqrt(i + 1.0) + 80.0
        return panel_quadrature(f, _dyadic_edges(upper, splits=50), points=32)
    raise ValueError(f"unknown phi_log_bracket mode {mode!r}")


def _phi_eq_log_bracket(i_max: int, b: float) -> list[float]:
    """Closed-form Phi(i, b) for all i = 0..i_max at a shared offset b."""
    out: list[float] = []
    x_half = 0.5 * b
    log_b = math.log(b)
    t = lgamma_int(i_max + 2)
    log_e1 = log_exp_integral_e1(x_half)
    # prefix sums of Gamma(k, x)/k! build G(j) = j! (E1 + sum_{k<=j} ...)
    log_gamma_terms = [log_e1]
    for k in range(1, i_max + 2):
        log_gamma_terms.append(log_upper_incomplete_gamma(k, x_half) - t[k + 1])
    needs_fallback: list[int] = []
    for i in range(i_max + 1):
        log_mag = np.empty(2 * (i + 1))
        signs = np.empty(2 * (i + 1))
        for j in range(i + 1):
            log_g = t[j + 1] + logsumexp(log_gamma_terms[: j + 1])
            log_common = log_binomial(i, j) + (i - j) * log_b + j * LN2
            sign_binom = 1.0 if (i - j) % 2 == 0 else -1.0
            log_mag[2 * j] = log_common + log_g
            signs[2 * j] = sign_binom
            lg_upper = log_upper_incomplete_gamma(j + 1, x_half)
            if log_b == 0.0:
                log_mag[2 * j + 1] = -math.inf
                signs[2 * j + 1] = 0.0
            else:
                log_mag[2 * j + 1] = log_common + math.log(abs(log_b)) + lg_upper
                signs[2 * j + 1] = sign_binom * math.copysign(1.0, log_b)
        value, sign = signed_logsumexp(log_mag, signs)
        lost = float(np.max(log_mag)) - value
        # past ~4 lost decimal digits the double path is no longer trustworthy
        if not math.isfinite(value) or lost > 9.2:
            needs_fallback.append(i)
            out.append(math.nan)
        else:
            out.append(sign * math.exp(x_half + value))
    if needs_fallback:
        refined = _phi_fixed_point(needs_fallback, b)
        for i, v in zip(needs_fallback, refined):
            out[i] = v
    return out


def _phi_fixed_point(indices: list[int], b: float) -> list[float]:
    """Re-evaluate the Phi closed form in adaptive arbitrary precision."""
    import mpmath as mp

    i_max = max(indices)
    dps = 60 + int(0.8 * i_max * math.log10(2.0 + b))
    for _ in range(6):
        with mp.workdps(dps):
            x = mp.mpf(b) / 2
            log_b = mp.log(b)
            gamma_terms = [mp.e1(x)]
            for k in range(1, i_max + 2):
                gamma_terms.append(mp.gammainc(k, x) / mp.factorial(k))
            prefix = [gamma_terms[0]]
            for g in gamma_terms[1:]:
                prefix.append(prefix[-1] + g)
            results = []
            worst_loss = 0.0
            for i in indices:
                total = mp.mpf(0)
                max_mag = mp.mpf(0)
                for j in range(i + 1):
                    g_big = mp.factorial(j) * prefix[j]
                    upper = mp.gammainc(j + 1, x)
                    term = (
                        mp.binomial(i, j)
                        * (-mp.mpf(b)) ** (i - j)
                        * mp.mpf(2) ** j
                        * (g_big + log_b * upper)
                    )
                    total += term
                    max_mag = max(max_mag, abs(term))
                if total != 0 and max_mag > 0:
                    loss = float(mp.log10(max_mag / abs(total)))
                    worst_loss = max(worst_loss, loss)
                results.append(mp.e**x * total)
            if worst_loss < dps - 20:
                return [float(v) for v in results]
        dps = int(dps + worst_loss + 30)
    raise RuntimeError(f"phi fixed-point evaluation failed to stabilize at b={b}")
