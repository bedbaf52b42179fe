"""Probability bounds on block coherence and recovery-guarantee conditions.

All logarithms are natural.
"""
from __future__ import annotations

import math
from dataclasses import dataclass

__all__ = [
    "TailBoundQuery",
    "GuaranteeInputs",
    "Theorem1Result",
    "SparsityBound",
    "tail_bound",
    "mu_intra_ccdf_bound",
    "mu_inter_ccdf_bound",
    "theorem1_condition",
    "theorem1_success_probability",
    "theorem3_sparsity_bound",
]


@dataclass(frozen=True)
class TailBoundQuery:
    """Query for ``P(sigma > sqrt((M-1)/N) + epsilon)``."""

    m_freqs: int
    n_pulses: int
    epsilon: float

    def __post_init__(self):
        if self.m_freqs < 2:
            raise ValueError("tail bound needs M >= 2")
        if self.n_pulses < 1:
            raise ValueError("tail bound needs N >= 1")
        if not 0 < self.epsilon <= 1:
            raise ValueError(f"epsilon must lie in (0, 1], got {self.epsilon}")

    @property
    def threshold(self) -> float:
        return math.sqrt((self.m_freqs - 1) / self.n_pulses) + self.epsilon


def tail_bound(query: TailBoundQuery) -> float:
    """``exp(-N eps^2 / (4 (M - 1)))`` for a single centred singular value."""
    m, n, eps = query.m_freqs, query.n_pulses, query.epsilon
    return math.exp(-n * eps ** 2 / (4 * (m - 1)))


def _union_bound(prefactor: float, c: float, m: int, n: int, raw: bool) -> float:
    if c < 0:
        raise ValueError(f"threshold must be nonnegative, got {c}")
    if m < 2:
        raise ValueError("coherence bounds need M >= 2")
    if prefactor == 0:
        return 0.0
    excess = math.sqrt(n) * c - math.sqrt(m - 1)
    if excess < 0:
        # below the mean level the bound says nothing
        return math.inf if raw else 1.0
    value = prefactor * math.exp(-excess ** 2 / (4 * (m - 1)))
    return value if raw else min(1.0, value)


def mu_intra_ccdf_bound(c1: float, m: int, n: int, raw: bool = False) -> float:
    """Upper bound on ``P(mu_I > c1)``; clamped to 1 unless ``raw``."""
    return _union_bound(m, c1, m, n, raw)


def mu_inter_ccdf_bound(c2: float, m: int, n: int, raw: bool = False) -> float:
    """Upper bound on ``P(mu_B > c2)`` with prefactor ``M * floor(N/2)``."""
    return _union_bound(m * (n // 2), c2, m, n, raw)


@dataclass(frozen=True)
class GuaranteeInputs:
    mu_intra: float
    mu_inter: float
    spectral_norm: float
    block_sparsity: int
    m_freqs: int
    n_pulses: int

    def __post_init__(self):
        for name in ("mu_intra", "mu_inter", "spectral_norm", "block_sparsity"):
            if getattr(self, name) < 0:
                raise ValueError(f"{name} must be nonnegative")
        if self.m_freqs * self.n_pulses < 2:
            raise ValueError("M * N must be at least 2")
        if self.block_sparsity > self.n_pulses:
            raise ValueError("block sparsity cannot exceed N")


@dataclass(frozen=True)
class Theorem1Result:
    lhs: float
    satisfied: bool
    terms: tuple[float, float, float, float]


def theorem1_condition(inputs: GuaranteeInputs) -> Theorem1Result:
    """Evaluate the block-incoherence condition ``lhs <= 1/4``.

    ``lhs = 17 sqrt(K log(MN) (1 + mu_I) / N) ||Psi|| + 48 mu_B log(MN)
            + (2K / N) ||Psi||^2 + 3 mu_I``
    """
    k, m, n = inputs.block_sparsity, inputs.m_freqs, inputs.n_pulses
    log_mn = math.log(m * n)
    norm = inputs.spectral_norm
    terms = (
        17 * math.sqrt(k * log_mn * (1 + inputs.mu_intra) / n) * norm,
        48 * inputs.mu_inter * log_mn,
        2 * k / n * norm ** 2,
        3 * inputs.mu_intra,
    )
    lhs = sum(terms)
    return Theorem1Result(lhs, lhs <= 0.25, terms)


def theorem1_success_probability(m: int, n: int) -> float:
    """Recovery probability ``1 - 4 (MN)^(-4 log 2)`` attached to the condition."""
    return 1.0 - 4.0 * (m * n) ** (-4.0 * math.log(2.0))


@dataclass(frozen=True)
class SparsityBound:
    k_max: int
    delta1: float
    delta2: float
    vacuous: bool
    raw_bound: float


def theorem3_sparsity_bound(m: int, n: int, epsilon: float) -> SparsityBound:
    """Largest block sparsity ``K`` covered with probability ``1 - epsilon``.

    ``K <= N (1/8 - d1 - d2)^2 / (81 M log(MN) (1 + 2 d2 / 3))`` where
    ``d1 = 24 r log(MN) (2 sqrt(log(MN) - log eps) + 1)``,
    ``d2 = 1.5 r (2 sqrt(log(2M) - log eps) + 1)`` and ``r = sqrt((M-1)/N)``.
    A nonpositive ``1/8 - d1 - d2`` gives ``k_max = 0`` with ``vacuous`` set.
    """
    if not 0 < epsilon < 1:
        raise ValueError(f"epsilon must lie in (0, 1), got {epsilon}")
    if m < 1 or n < 1 or m * n < 2:
        raise ValueError("need M, N >= 1 and M * N >= 2")
    log_mn = math.log(m * n)
    log_eps = math.log(epsilon)
    r = math.sqrt((m - 1) / n)
    delta1 = 24 * r * log_mn * (2 * math.sqrt(log_mn - log_eps) + 1)
    delta2 = 1.5 * r * (2 * math.sqrt(math.log(2 * m) - log_eps) + 1)
    margin = 0.125 - delta1 - delta2
    if margin <= 0:
        return SparsityBound(0, delta1, delta2, True, 0.0)
    raw = n * margin ** 2 / (81 * m * log_mn * (1 + 2 * delta2 / 3))
    k_max = math.floor(raw)
    return SparsityBound(k_max, delta1, delta2, k_max < 1, raw)
