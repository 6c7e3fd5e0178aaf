"""Scalar evaluation of the wrapped alternating Gaussian kernel family.

Four related quantities are evaluated with certified truncation error:

* ``g`` -- alternating sum of standard-normal translates with step ``a``;
  anti-periodic, ``g(x + a) = -g(x)``, and even in ``x``.
* ``G(a)`` -- mass of ``g`` over the central bin ``[-a/2, a/2]``; smooth,
  strictly increasing, ``G(0+) = 0`` and ``G(inf) = 1``.
* ``gamma`` -- stay probability of the three-outcome resampling die;
  supported on ``(-a/2, a/2)`` where it equals ``g/p`` (``p`` the standard
  normal density).
* ``phi`` -- up-shift probability, the decaying solution of
  ``phi(x) p(x) = [1 - gamma(x+a) - phi(x+a)] p(x+a)``.

Each of ``g`` and ``gamma`` has two independent series representations:
translate sums over ``k`` ("primal", terms decay like ``exp(-k^2 a^2/2)``)
and Poisson-summed cosine series ("dual", terms decay like
``exp(-m^2 pi^2 / (2 a^2))``).  The decay rates coincide at
``a = sqrt(pi)``, which is the mode crossover.  ``big_g_oracle`` provides
a third route for ``G(a)`` -- arbitrary-precision quadrature of the
translate sum -- used as the anti-drift reference for `eval_big_g`.

All exponents are assembled before exponentiation (no density ratios),
so no intermediate overflows for any ``a > 0``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import mpmath
from scipy.optimize import brentq

__all__ = [
    "KernelParams",
    "KernelEval",
    "SeriesConvergenceError",
    "KernelRangeError",
    "MODE_CROSSOVER_A",
    "normal_pdf",
    "eval_g",
    "eval_big_g",
    "big_g_oracle",
    "eval_gamma",
    "eval_phi",
    "fp_residual",
    "solve_a_for_g",
]

SQRT_TWO_PI = math.sqrt(2.0 * math.pi)

#: Mode crossover: primal terms decay like exp(-k^2 a^2 / 2), dual terms
#: like exp(-m^2 pi^2 / (2 a^2)); the rates are equal at a = sqrt(pi).
MODE_CROSSOVER_A = math.sqrt(math.pi)

# Denormal floor used in relative stopping rules so that series whose true
# value is ~0 (e.g. g at a bin edge) still terminate via term underflow.
_TINY = 1e-300


class SeriesConvergenceError(RuntimeError):
    """A series failed to meet its tolerance within the term cap."""


class KernelRangeError(RuntimeError):
    """A probability series produced a value outside its certified range.

    Raised when the raw (pre-clamp) value of gamma or phi falls outside
    [-10 rel_tol, 1 + 10 rel_tol]; this signals a series bug rather than
    ordinary round-off.
    """


@dataclass(frozen=True)
class KernelParams:
    """Evaluation parameters: bin half-width pairing and truncation control.

    a : hypercube edge half-length / bin width, dimensionless, > 0.
    rel_tol : relative series tolerance, in (0, 1e-6].
    max_terms : cap on evaluated series terms, >= 8.
    """

    a: float
    rel_tol: float = 1e-12
    max_terms: int = 256

    def __post_init__(self) -> None:
        if not (isinstance(self.a, (int, float)) and math.isfinite(self.a) and self.a > 0):
            raise ValueError(f"a must be a positive finite real, got {self.a!r}")
        if not (0.0 < self.rel_tol <= 1e-6):
            raise ValueError(f"rel_tol must lie in (0, 1e-6], got {self.rel_tol!r}")
        if not (isinstance(self.max_terms, int) and self.max_terms >= 8):
            raise ValueError(f"max_terms must be an integer >= 8, got {self.max_terms!r}")

    @property
    def mode(self) -> str:
        """Series route: 'primal' for a >= sqrt(pi), 'dual' below."""
        return "primal" if self.a >= MODE_CROSSOVER_A else "dual"

    @property
    def x_max(self) -> float:
        """Domain clamp for phi; |X| > 12 has N(0,1) probability < 1e-32."""
        return 12.0 + 4.0 * self.a


@dataclass(frozen=True)
class KernelEval:
    """A series value with its truncation certificate.

    est_error is a rigorous bound on the omitted tail and satisfies
    est_error <= rel_tol * max(|value|, 1e-300).
    """

    value: float
    terms_used: int
    mode: str
    est_error: float


def normal_pdf(x: float) -> float:
    """Standard normal density."""
    return math.exp(-0.5 * x * x) / SQRT_TWO_PI


def _g_primal(x: float, params: KernelParams) -> KernelEval:
    """Translate-sum route for g, summed in rings around the nearest translate.

    Ring magnitudes decay by at least exp(-a^2) per step once past the
    center, which gives the geometric tail certificate.
    """
    a = params.a
    k0 = -round(x / a)
    geom = 1.0 / (1.0 - math.exp(-a * a)) if a * a < 700 else 1.0

    def signed_term(k: int) -> float:
        u = x + k * a
        t = math.exp(-0.5 * u * u)
        return -t if (k & 1) else t

    total = signed_term(k0)
    terms = 1
    d = 0
    while True:
        d += 1
        total += signed_term(k0 + d) + signed_term(k0 - d)
        terms += 2
        up = x + (k0 + d + 1) * a
        um = x + (k0 - d - 1) * a
        tail = (math.exp(-0.5 * up * up) + math.exp(-0.5 * um * um)) * geom
        if tail <= params.rel_tol * max(abs(total), _TINY):
            return KernelEval(total / SQRT_TWO_PI, terms, "primal", tail / SQRT_TWO_PI)
        if terms + 2 > params.max_terms:
            raise SeriesConvergenceError(
                f"primal g series: no convergence within {params.max_terms} terms "
                f"(x={x!r}, a={a!r})"
            )


def _g_dual(x: float, params: KernelParams) -> KernelEval:
    """Poisson-summed cosine route for g over odd frequencies."""
    a = params.a
    beta = math.pi * math.pi / (2.0 * a * a)
    scale = 2.0 / a
    # Successive odd-term magnitude ratios are <= exp(-8 beta).
    q = math.exp(-8.0 * beta)
    geom = 1.0 / (1.0 - q)
    total = 0.0
    terms = 0
    m = 1
    while True:
        total += math.exp(-beta * m * m) * math.cos(m * math.pi * x / a)
        terms += 1
        nxt = m + 2
        tail = scale * math.exp(-beta * nxt * nxt) * geom
        if tail <= params.rel_tol * max(scale * abs(total), _TINY):
            return KernelEval(scale * total, terms, "dual", tail)
        if terms + 1 > params.max_terms:
            raise SeriesConvergenceError(
                f"dual g series: no convergence within {params.max_terms} terms "
                f"(x={x!r}, a={a!r})"
            )
        m = nxt


def eval_g(x: float, params: KernelParams, mode: str | None = None) -> KernelEval:
    """Evaluate the alternating wrapped Gaussian g at x.

    g(x) = (1/sqrt(2 pi)) sum_k (-1)^k exp(-(x + k a)^2 / 2)
         = (2/a) sum_{m odd >= 1} exp(-m^2 pi^2 / (2 a^2)) cos(m pi x / a)

    The route is picked by ``params.mode`` unless ``mode`` overrides it
    (used by the cross-representation tests).

    Raises SeriesConvergenceError if the term cap is hit.
    """
    mode = params.mode if mode is None else mode
    if mode == "primal":
        return _g_primal(x, params)
    if mode == "dual":
        return _g_dual(x, params)
    raise ValueError(f"unknown mode {mode!r}")


def eval_big_g(params: KernelParams) -> KernelEval:
    """Central-bin mass G(a) via the Poisson-summed series.

    G(a) = (4/pi) sum_{k>=0} (-1)^k / (1+2k) * exp(-(1+2k)^2 pi^2 / (2 a^2))

    Alternating with strictly decreasing terms, so the remainder is
    bounded by the first omitted term.
    """
    a = params.a
    beta = math.pi * math.pi / (2.0 * a * a)
    four_over_pi = 4.0 / math.pi
    total = 0.0
    terms = 0
    k = 0
    while True:
        odd = 1 + 2 * k
        t = math.exp(-beta * odd * odd) / odd
        total += t if (k % 2 == 0) else -t
        terms += 1
        nxt = 3 + 2 * k
        tail = four_over_pi * math.exp(-beta * nxt * nxt) / nxt
        if tail <= params.rel_tol * max(four_over_pi * abs(total), _TINY):
            return KernelEval(four_over_pi * total, terms, "dual", tail)
        if terms + 1 > params.max_terms:
            raise SeriesConvergenceError(
                f"G(a) series: no convergence within {params.max_terms} terms (a={a!r})"
            )
        k += 1


def big_g_oracle(params: KernelParams) -> float:
    """Brute-force route for G(a): quadrature of the translate sum.

    Integrates the translate-sum representation of g over [-a/2, a/2]
    (only that representation; the Poisson-summed series never enters) in
    mpmath arbitrary precision, with working digits scaled to resolve
    G(a) ~ exp(-pi^2/(2 a^2)) down to a -> 0.  Serves as the anti-drift
    reference for eval_big_g; absolute accuracy far exceeds 1e-12.

    Raises SeriesConvergenceError if the quadrature error estimate is
    above 1e-13.
    """
    a = params.a
    dps = 25 + int(math.pi * math.pi / (2.0 * a * a) / math.log(10.0)) + 10
    with mpmath.workdps(dps):
        am = mpmath.mpf(a)
        # keep translates while exp(-(x+ka)^2/2) can exceed 10^-(dps+8)
        reach = mpmath.sqrt(2 * (dps + 8) * mpmath.log(10))
        kmax = int(mpmath.ceil((reach + am / 2) / am)) + 2
        inv_norm = 1 / mpmath.sqrt(2 * mpmath.pi)

        def translate_sum(x: mpmath.mpf) -> mpmath.mpf:
            s = mpmath.mpf(0)
            for k in range(-kmax, kmax + 1):
                u = x + k * am
                t = mpmath.e ** (-u * u / 2)
                s += -t if (k & 1) else t
            return s * inv_norm

        # g is even: integrate the half bin and double.
        half, err = mpmath.quad(translate_sum, [0, am / 2], error=True)
        value = 2 * half
        if err > mpmath.mpf("1e-13"):
            raise SeriesConvergenceError(
                f"oracle quadrature for G(a) did not converge (a={a!r}, err={err})"
            )
        return float(value)


def _gamma_raw(x: float, params: KernelParams) -> float:
    """Stay probability before range clamping.

    Zero outside the open central bin.  Inside it, the primal route sums
    exp(-k a x - k^2 a^2 / 2) directly; the dual route (mandatory for
    small a, where the primal terms are O(1) and cancel catastrophically)
    divides the dual g by the normal density.
    """
    a = params.a
    if abs(x) >= 0.5 * a:
        return 0.0
    if params.mode == "dual":
        ge = _g_dual(x, params)
        return ge.value * SQRT_TWO_PI * math.exp(0.5 * x * x)

    geom = 1.0 / (1.0 - math.exp(-a * a)) if a * a < 700 else 1.0
    total = 1.0
    terms = 1
    k = 0
    while True:
        k += 1
        pair = math.exp(-k * a * x - 0.5 * k * k * a * a) + math.exp(
            k * a * x - 0.5 * k * k * a * a
        )
        total += pair if (k % 2 == 0) else -pair
        terms += 2
        kn = k + 1
        tail = (
            math.exp(-kn * a * x - 0.5 * kn * kn * a * a)
            + math.exp(kn * a * x - 0.5 * kn * kn * a * a)
        ) * geom
        if tail <= params.rel_tol * max(abs(total), _TINY):
            return total
        if terms + 2 > params.max_terms:
            raise SeriesConvergenceError(
                f"primal gamma series: no convergence within {params.max_terms} terms "
                f"(x={x!r}, a={a!r})"
            )


def _check_range(raw: float, params: KernelParams, what: str, x: float) -> None:
    band = 10.0 * params.rel_tol
    if not (-band <= raw <= 1.0 + band):
        raise KernelRangeError(
            f"{what}({x!r}, a={params.a!r}) = {raw!r} outside [-10 rel_tol, 1 + 10 rel_tol]"
        )


def eval_gamma(x: float, params: KernelParams) -> float:
    """Stay probability gamma(x), clamped to [0, 1].

    gamma(x) = sum_k (-1)^k exp(-k a x - k^2 a^2 / 2) for |x| < a/2,
    zero otherwise; equals g(x)/p(x) on its support.  The raw value is
    verified to lie within 10 rel_tol of [0, 1] before clamping.
    """
    raw = _gamma_raw(x, params)
    _check_range(raw, params, "gamma", x)
    return min(1.0, max(0.0, raw))


def _phi_forward_raw(y: float, params: KernelParams) -> float:
    """Forward up-shift series at y >= 0.

    sum_{k>=1} (-1)^(k+1) [1 - gamma(y + k a)] exp(-k a y - k^2 a^2 / 2)

    For y >= 0 every argument y + k a lies past a/2, so the stay-probability
    factor is identically 1 and the terms decrease monotonically; the
    alternating remainder is bounded by the first omitted term.
    """
    a = params.a
    total = 0.0
    terms = 0
    k = 0
    sign = 1.0
    while True:
        k += 1
        stay_factor = 1.0 - _gamma_raw(y + k * a, params)
        total += sign * stay_factor * math.exp(-k * a * y - 0.5 * k * k * a * a)
        sign = -sign
        terms += 1
        kn = k + 1
        tail = math.exp(-kn * a * y - 0.5 * kn * kn * a * a)
        if tail <= params.rel_tol * max(abs(total), _TINY):
            return total
        if terms + 1 > params.max_terms:
            raise SeriesConvergenceError(
                f"up-shift series: no convergence within {params.max_terms} terms "
                f"(y={y!r}, a={a!r})"
            )


def _phi_raw(x: float, params: KernelParams) -> float:
    """Up-shift probability before range clamping.

    x >= 0 uses the forward series directly.  x < 0 would lose ~x^2/2
    nats to cancellation in the forward series, so the mirrored stable
    series psi(x) = sum_{k>=1} (-1)^(k+1) [1 - gamma(x - k a)]
    exp(k a x - k^2 a^2 / 2) is evaluated instead (term-for-term it is
    the forward series at -x, by evenness of gamma) and
    phi(x) = 1 - gamma(x) - psi(x).
    """
    if abs(x) > params.x_max:
        raise ValueError(
            f"|x| = {abs(x)!r} beyond the evaluation clamp x_max = {params.x_max!r}"
        )
    if x >= 0.0:
        return _phi_forward_raw(x, params)
    return 1.0 - _gamma_raw(x, params) - _phi_forward_raw(-x, params)


def eval_phi(x: float, params: KernelParams) -> float:
    """Up-shift probability phi(x), clamped to [0, 1].

    Raises ValueError beyond the domain clamp and KernelRangeError if the
    raw value escapes the certified range band.
    """
    raw = _phi_raw(x, params)
    _check_range(raw, params, "phi", x)
    return min(1.0, max(0.0, raw))


def fp_residual(x: float, params: KernelParams) -> float:
    """Residual of the density-preservation identity at x.

    phi(x-a) p(x-a) + gamma(x) p(x) + [1 - phi(x+a) - gamma(x+a)] p(x+a) - p(x)

    Exactly zero in exact arithmetic; the numerical value reflects series
    truncation and round-off only.
    """
    a = params.a
    if abs(x) > params.x_max - a:
        raise ValueError(
            f"|x| = {abs(x)!r} beyond x_max - a = {params.x_max - a!r}"
        )
    return (
        eval_phi(x - a, params) * normal_pdf(x - a)
        + eval_gamma(x, params) * normal_pdf(x)
        + (1.0 - eval_phi(x + a, params) - eval_gamma(x + a, params)) * normal_pdf(x + a)
        - normal_pdf(x)
    )


def solve_a_for_g(target: float, rel_tol: float = 1e-9) -> float:
    """Invert G: find a with |G(a) - target| <= rel_tol.

    Valid for target in (1e-12, 1 - 1e-12); G is strictly increasing, so
    a bracketed root search on [0.2, 16] (where G spans far past both
    target bounds) converges unconditionally.
    """
    if not (1e-12 < target < 1.0 - 1e-12):
        raise ValueError(f"target must lie in (1e-12, 1 - 1e-12), got {target!r}")

    def objective(a: float) -> float:
        return eval_big_g(KernelParams(a, rel_tol=1e-13, max_terms=512)).value - target

    a = float(brentq(objective, 0.2, 16.0, xtol=1e-13, rtol=8.9e-16))
    achieved = objective(a)
    if abs(achieved) > rel_tol:
        raise SeriesConvergenceError(
            f"root search left |G(a) - target| = {abs(achieved)!r} > {rel_tol!r}"
        )
    return a
