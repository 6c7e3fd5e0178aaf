"""The adversary: distribution-preserving resampling and worst-case evasion.

Two attackers are implemented.  ``couple_perturb`` shifts each observed
coordinate by -a, 0 or +a using the three-sided die driven by the
stay/up-shift probabilities, which leaves the standard normal law of
every coordinate intact.  ``optimal_parity_evasion`` is the worst-case
sparsity-constrained adversary against the bin-parity detector: it keeps
(leaves untouched) as many +1-labelled coordinates as the sparsity
budget allows and flips everything else.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from . import accel
from .kernels import KernelParams

__all__ = [
    "PerturbationVector",
    "CouplingPolicy",
    "InvalidProbabilitiesError",
    "sample_die",
    "couple_perturb",
    "sparsity_ratio",
    "optimal_parity_evasion",
]

_PROB_SLACK = 1e-9


class InvalidProbabilitiesError(ValueError):
    """Die probabilities are negative or sum beyond 1 + 1e-9."""


@dataclass(frozen=True)
class PerturbationVector:
    """A perturbation with every entry exactly -a, 0 or +a.

    ``signs`` holds the entries in units of a (int8 in {-1, 0, +1}), so
    membership is exact by construction and ``values`` reproduces the
    float entries as signs * a.
    """

    signs: np.ndarray
    a: float

    def __post_init__(self) -> None:
        if not (self.a > 0.0 and math.isfinite(self.a)):
            raise ValueError(f"a must be positive and finite, got {self.a!r}")
        signs = np.asarray(self.signs, dtype=np.int8)
        if signs.ndim != 1:
            raise ValueError("signs must be one-dimensional")
        if signs.size and not np.isin(signs, (-1, 0, 1)).all():
            raise ValueError("every entry must be -a, 0 or +a")
        object.__setattr__(self, "signs", signs)

    @classmethod
    def from_values(cls, values, a: float) -> "PerturbationVector":
        values = np.asarray(values, dtype=np.float64)
        signs = np.zeros(values.shape, dtype=np.int8)
        signs[values == a] = 1
        signs[values == -a] = -1
        ok = (values == a) | (values == -a) | (values == 0.0)
        if not ok.all():
            raise ValueError("entries must be exactly -a, 0 or +a")
        return cls(signs, a)

    @property
    def n(self) -> int:
        return int(self.signs.size)

    @property
    def values(self) -> np.ndarray:
        return self.signs * self.a

    @property
    def zero_count(self) -> int:
        return int(np.count_nonzero(self.signs == 0))

    def sparsity_ratio(self) -> float:
        return sparsity_ratio(self)

    def to_rle(self) -> list[list[int]]:
        """Run-length encoding as [sign, count] pairs (signs in units of a)."""
        if self.n == 0:
            return []
        s = self.signs
        breaks = np.flatnonzero(s[1:] != s[:-1]) + 1
        starts = np.concatenate(([0], breaks))
        ends = np.concatenate((breaks, [s.size]))
        return [[int(s[i]), int(j - i)] for i, j in zip(starts, ends)]

    @classmethod
    def from_rle(cls, rle, a: float) -> "PerturbationVector":
        parts = [np.full(int(count), int(sign), dtype=np.int8) for sign, count in rle]
        signs = np.concatenate(parts) if parts else np.empty(0, dtype=np.int8)
        return cls(signs, a)


@dataclass(frozen=True)
class CouplingPolicy:
    """Kernel parameters plus the seeded generator driving the die.

    The die probabilities (phi(x), gamma(x)) are nonnegative and sum to
    at most 1 by the kernel range guarantees.
    """

    kernel: KernelParams
    rng_stream: np.random.Generator


def sample_die(p1: float, p2: float, a: float, u: float) -> float:
    """One three-sided die roll: +a on u < p1, 0 on p1 <= u < p1+p2, else -a.

    Tiny negative probabilities (>= -1e-9) are clamped to zero; anything
    worse, or p1 + p2 > 1 + 1e-9, raises InvalidProbabilitiesError.
    """
    if p1 < -_PROB_SLACK or p2 < -_PROB_SLACK:
        raise InvalidProbabilitiesError(f"negative die probabilities: p1={p1!r}, p2={p2!r}")
    if p1 + p2 > 1.0 + _PROB_SLACK:
        raise InvalidProbabilitiesError(f"die probabilities exceed 1: p1+p2={p1 + p2!r}")
    p1 = max(0.0, p1)
    p2 = max(0.0, p2)
    if u < p1:
        return a
    if u < min(p1 + p2, 1.0):
        return 0.0
    return -a


def couple_perturb(x, policy: CouplingPolicy) -> tuple[PerturbationVector, np.ndarray]:
    """Resample every coordinate by the coupling die.

    For each i: theta_i = die(phi(x_i), gamma(x_i)) and x'_i = x_i +
    theta_i.  Each x'_i is again standard normal, which is the whole
    point of the construction.
    """
    x = np.ascontiguousarray(x, dtype=np.float64)
    if x.ndim != 1 or x.size == 0:
        raise ValueError("x must be a nonempty 1-d array")
    params = policy.kernel
    if not np.isfinite(x).all():
        raise ValueError("x must be finite")
    worst = float(np.max(np.abs(x)))
    if worst > params.x_max:
        raise ValueError(f"max|x| = {worst!r} beyond the clamp x_max = {params.x_max!r}")

    plan = accel.plan_for(params.a, params.rel_tol)
    phi, gamma = accel.phi_gamma(x, plan)
    u = policy.rng_stream.random(x.size)
    signs = accel.die_outcomes(phi, gamma, u)
    theta = PerturbationVector(signs, params.a)
    return theta, x + signs * params.a


def sparsity_ratio(theta: PerturbationVector) -> float:
    """Fraction of untouched coordinates, #{i: theta_i = 0} / n.

    Membership in the budget-t family is the strict predicate
    sparsity_ratio < t.
    """
    if theta.n == 0:
        raise ValueError("sparsity ratio of an empty perturbation is undefined")
    return theta.zero_count / theta.n


def optimal_parity_evasion(z, a: float, t: float, n: int) -> PerturbationVector:
    """Best evasion against the parity statistic under a sparsity budget.

    With z the pre-attack parity labels, the attacked statistic is
    A' = -A + (2/n) * sum of z over untouched coordinates, so the optimum
    keeps up to m = ceil(t n) - 1 coordinates (the strict budget) chosen
    among those with z = +1 (fewer if fewer exist, lowest index first)
    and shifts every other coordinate by +a (parity is sign-blind; +a by
    convention).
    """
    z = np.asarray(z, dtype=np.int8)
    if z.ndim != 1 or z.size != n or n <= 0:
        raise ValueError(f"z must be a 1-d array of length n={n}")
    if not np.isin(z, (-1, 1)).all():
        raise ValueError("z entries must be +-1")
    if not (0.0 <= t <= 1.0):
        raise ValueError(f"t must lie in [0, 1], got {t!r}")
    budget = math.ceil(t * n) - 1
    if budget < 0:
        raise ValueError(
            f"no perturbation has sparsity ratio < {t!r}; the constrained family is empty"
        )
    keep = np.flatnonzero(z == 1)[:budget]
    signs = np.ones(n, dtype=np.int8)
    signs[keep] = 0
    return PerturbationVector(signs, a)
