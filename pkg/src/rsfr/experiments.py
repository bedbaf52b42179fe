"""Monte Carlo harness for the coherence and reconstruction experiments.

Trial ``i`` of a run draws its codes, scene and noise from seed
``base_seed + i``, so tables do not depend on how trials are scheduled.
"""
from __future__ import annotations

import enum
import math
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field, replace
from typing import Callable, Iterable, Sequence

import numpy as np

from .bounds import (GuaranteeInputs, SparsityBound, Theorem1Result, mu_inter_ccdf_bound,
                     mu_intra_ccdf_bound, theorem1_condition, theorem3_sparsity_bound)
from .core import (DopplerMode, FrequencyCodes, RadarParams, build_observation_matrix,
                   draw_codes, scene_to_vector, snr_to_noise_power, synthesize_measurement,
                   synthesize_scene)
from .recovery import (SolverConfig, basis_pursuit_solve, block_lasso_solve, block_omp,
                       extract_support_topk, lasso_solve, matched_filter, omp)
from .spectral import CoherenceReport, Method, coherence_report, eigenvalue_table

__all__ = [
    "ExperimentKind",
    "Algorithm",
    "ModeSetting",
    "ExperimentSpec",
    "MetricsRow",
    "CcdfPoint",
    "AnalysisReport",
    "exact_recovery_metric",
    "hit_rate_metric",
    "recover_support",
    "collect_coherence_samples",
    "run_ccdf_experiment",
    "run_exact_rate_experiment",
    "run_hit_rate_experiment",
    "run_analysis",
    "bound_table",
    "desk_scale",
    "paper_scale",
]


class ExperimentKind(str, enum.Enum):
    CCDF = "ccdf"
    EXACT_RATE = "exact-rate"
    HIT_RATE = "hit-rate"
    ANALYZE = "analyze"
    BOUND = "bound"


class Algorithm(str, enum.Enum):
    MATCHED_FILTER = "mf"
    OMP = "omp"
    BLOCK_OMP = "block-omp"
    LASSO = "lasso"
    BLOCK_LASSO = "block-lasso"
    BP = "bp"
    BLOCK_BP = "block-bp"

    @property
    def greedy(self) -> bool:
        return self in (Algorithm.OMP, Algorithm.BLOCK_OMP)


@dataclass(frozen=True)
class ModeSetting:
    """Doppler mode plus an optional relative bandwidth ``M df / f_c``.

    ``rb`` replaces the carrier (``f_c = M df / rb``, ``df`` held fixed);
    ``None`` keeps the carrier in the radar parameters.
    """

    mode: DopplerMode = DopplerMode.EXACT
    rb: float | None = None

    def __post_init__(self):
        object.__setattr__(self, "mode", DopplerMode(self.mode))

    def apply(self, params: RadarParams) -> RadarParams:
        if self.rb is None or self.mode is DopplerMode.SIMPLIFIED:
            return params
        return params.with_relative_bandwidth(self.rb)

    @property
    def label(self) -> str:
        if self.mode is DopplerMode.SIMPLIFIED:
            return "RB=0"
        return "exact" if self.rb is None else f"RB={self.rb:g}"


def _k_default():
    return tuple(range(1, 9))


@dataclass(frozen=True)
class ExperimentSpec:
    kind: ExperimentKind
    params: RadarParams = field(default_factory=RadarParams)
    modes: tuple[ModeSetting, ...] = (ModeSetting(DopplerMode.EXACT),)
    trials: int = 200
    k_range: tuple[int, ...] = field(default_factory=_k_default)
    snr_range_db: tuple[float, ...] = (0.0, 5.0, 10.0, 15.0)
    base_seed: int = 0
    algorithms: tuple[Algorithm, ...] = (Algorithm.OMP, Algorithm.BLOCK_OMP)
    scatterers_per_target: int = 8
    ccdf_points: int = 200
    solver: SolverConfig = field(default_factory=SolverConfig)
    workers: int = 1

    def __post_init__(self):
        object.__setattr__(self, "kind", ExperimentKind(self.kind))
        object.__setattr__(self, "modes", tuple(self.modes))
        object.__setattr__(self, "algorithms", tuple(Algorithm(a) for a in self.algorithms))
        object.__setattr__(self, "k_range", tuple(int(k) for k in self.k_range))
        object.__setattr__(self, "snr_range_db", tuple(float(s) for s in self.snr_range_db))
        if self.trials < 1:
            raise ValueError("trials must be at least 1")
        if self.base_seed < 0:
            raise ValueError("base_seed must be nonnegative")
        if any(k < 0 or k > self.params.n_pulses for k in self.k_range):
            raise ValueError(f"block counts must lie in [0, {self.params.n_pulses}]")
        recovery = self.kind in (ExperimentKind.EXACT_RATE, ExperimentKind.HIT_RATE)
        if recovery and not 1 <= self.scatterers_per_target <= self.params.n_freqs:
            raise ValueError("scatterers_per_target must lie in [1, M]")

    def seed(self, trial: int) -> int:
        return self.base_seed + trial

    def to_dict(self) -> dict:
        p = self.params
        return {
            "kind": self.kind.value,
            "params": {"n_pulses": p.n_pulses, "n_freqs": p.n_freqs,
                       "freq_step": p.freq_step, "carrier": p.carrier, "pri": p.pri},
            "modes": [{"mode": m.mode.value, "rb": m.rb} for m in self.modes],
            "trials": self.trials,
            "k_range": list(self.k_range),
            "snr_range_db": list(self.snr_range_db),
            "base_seed": self.base_seed,
            "algorithms": [a.value for a in self.algorithms],
            "scatterers_per_target": self.scatterers_per_target,
            "ccdf_points": self.ccdf_points,
            "solver": {"lam": self.solver.lam, "max_iterations": self.solver.max_iterations,
                       "tolerance": self.solver.tolerance,
                       "support_threshold": self.solver.support_threshold,
                       "penalty": self.solver.penalty},
        }


@dataclass(frozen=True)
class MetricsRow:
    algorithm: str
    mode: str
    K: int
    snr_db: float | None
    metric_name: str
    value: float
    trials: int

    @property
    def std_error(self) -> float:
        """Binomial standard error ``sqrt(p (1 - p) / trials)``."""
        return math.sqrt(self.value * (1 - self.value) / self.trials)


@dataclass(frozen=True)
class CcdfPoint:
    quantity: str
    mode: str
    threshold: float
    ccdf: float
    bound: float


def exact_recovery_metric(estimated_support, true_support) -> int:
    return int(frozenset(estimated_support) == frozenset(true_support))


def hit_rate_metric(estimated_support, true_support) -> float:
    truth = frozenset(true_support)
    if not truth:
        raise ValueError("hit rate is undefined for an empty true support")
    return len(truth & frozenset(estimated_support)) / len(truth)


def recover_support(algorithm: Algorithm, matrix, y, n_blocks: int, n_scatterers: int,
                    config: SolverConfig, noisy: bool):
    """Run one algorithm and extract its support under the experiment rules.

    Greedy solvers report the columns they selected, run with the true
    scatterer or block count. Convex solvers use the magnitude threshold in
    noiseless runs and the ``n_scatterers`` largest entries in noisy runs;
    the matched filter always uses the largest entries.
    """
    algorithm = Algorithm(algorithm)
    if algorithm is Algorithm.OMP:
        result = omp(matrix, y, min(n_scatterers, matrix.shape[0]))
        return result.support, result
    if algorithm is Algorithm.BLOCK_OMP:
        result = block_omp(matrix, y, n_blocks, support_threshold=config.support_threshold)
        return result.support, result
    if algorithm is Algorithm.MATCHED_FILTER:
        result = matched_filter(matrix, y)
    elif algorithm is Algorithm.LASSO:
        result = lasso_solve(matrix, y, config)
    elif algorithm is Algorithm.BLOCK_LASSO:
        result = block_lasso_solve(matrix, y, config)
    else:
        result = basis_pursuit_solve(matrix, y, config,
                                     blockwise=algorithm is Algorithm.BLOCK_BP)
    if noisy or algorithm is Algorithm.MATCHED_FILTER:
        return extract_support_topk(result.estimate, n_scatterers), result
    return result.support, result


def _map(fn: Callable, items: Sequence, workers: int) -> list:
    if workers <= 1:
        return [fn(item) for item in items]
    with ProcessPoolExecutor(max_workers=workers) as pool:
        return list(pool.map(fn, items, chunksize=max(1, len(items) // (4 * workers))))


# -- coherence CCDFs ---------------------------------------------------------

QUANTITIES = ("mu_intra", "mu_inter", "spectral_norm")


@dataclass(frozen=True)
class _CoherenceTrial:
    params: RadarParams
    modes: tuple[ModeSetting, ...]

    def __call__(self, seed: int) -> list[tuple[float, float, float]]:
        codes = draw_codes(self.params, seed)
        out = []
        for setting in self.modes:
            if setting.mode is DopplerMode.SIMPLIFIED:
                eig = eigenvalue_table(codes)
                n = codes.n_pulses
                mu_i = float(np.abs(eig[0] - 1).max())
                mu_b = float(np.abs(eig[1:n // 2 + 1]).max()) if n > 1 else 0.0
                out.append((mu_i, mu_b, math.sqrt(codes.n_freqs)))
            else:
                matrix = build_observation_matrix(setting.apply(self.params), codes,
                                                  setting.mode)
                rep = coherence_report(matrix, Method.NUMERIC_SVD)
                out.append((rep.mu_intra, rep.mu_inter, rep.spectral_norm))
        return out


def collect_coherence_samples(spec: ExperimentSpec) -> dict[tuple[str, str], np.ndarray]:
    """Per-trial ``mu_I``, ``mu_B`` and ``||Psi||`` keyed by (quantity, mode label).

    Simplified mode uses the closed forms; exact modes use SVDs.
    """
    worker = _CoherenceTrial(spec.params, spec.modes)
    per_trial = _map(worker, [spec.seed(i) for i in range(spec.trials)], spec.workers)
    arr = np.array(per_trial)  # trial x mode x quantity
    return {(q, s.label): arr[:, j, i]
            for j, s in enumerate(spec.modes) for i, q in enumerate(QUANTITIES)}


def empirical_ccdf(samples: np.ndarray, thresholds: np.ndarray) -> np.ndarray:
    """Fraction of samples strictly above each threshold."""
    s = np.sort(np.asarray(samples))
    return 1.0 - np.searchsorted(s, thresholds, side="right") / s.size


def run_ccdf_experiment(spec: ExperimentSpec) -> list[CcdfPoint]:
    """Empirical CCDFs of the coherences and spectral norm with analytic bounds.

    Thresholds span ``[0, 1.1 * max]`` of each quantity over all modes.
    """
    samples = collect_coherence_samples(spec)
    m, n = spec.params.n_freqs, spec.params.n_pulses
    rows = []
    for q in QUANTITIES:
        top = max(v.max() for (qq, _), v in samples.items() if qq == q)
        grid = np.linspace(0.0, 1.1 * top, spec.ccdf_points)
        for setting in spec.modes:
            ccdf = empirical_ccdf(samples[(q, setting.label)], grid)
            for c, f in zip(grid, ccdf):
                if q == "mu_intra" and m >= 2:
                    b = mu_intra_ccdf_bound(c, m, n)
                elif q == "mu_inter" and m >= 2:
                    b = mu_inter_ccdf_bound(c, m, n)
                else:
                    b = math.nan
                rows.append(CcdfPoint(q, setting.label, float(c), float(f), float(b)))
    return rows


# -- reconstruction experiments ---------------------------------------------

@dataclass(frozen=True)
class _RecoveryTrial:
    params: RadarParams
    setting: ModeSetting
    n_blocks: int
    scatterers: int
    noise_power: float
    algorithms: tuple[Algorithm, ...]
    config: SolverConfig

    def __call__(self, seed: int) -> list[tuple[int, float]]:
        params = self.setting.apply(self.params)
        codes = draw_codes(params, seed)
        matrix = build_observation_matrix(params, codes, self.setting.mode)
        x = scene_to_vector(synthesize_scene(params, self.n_blocks, self.scatterers, seed),
                            params)
        y = synthesize_measurement(matrix, x, self.noise_power, seed).samples
        truth = x.support()
        n_scat = len(truth)
        out = []
        for alg in self.algorithms:
            if n_scat == 0:
                # nothing to find; every solver returns the empty support on y = 0
                support = frozenset()
            else:
                support, _ = recover_support(alg, matrix, y, self.n_blocks, n_scat,
                                             self.config, self.noise_power > 0)
            hit = hit_rate_metric(support, truth) if truth else 1.0
            out.append((exact_recovery_metric(support, truth), hit))
        return out


def _run_cells(spec: ExperimentSpec, snrs: Iterable[float | None]) -> list[MetricsRow]:
    rows = []
    for setting in spec.modes:
        for snr in snrs:
            noise = 0.0 if snr is None else snr_to_noise_power(snr)
            for k in spec.k_range:
                worker = _RecoveryTrial(spec.params, setting, k, spec.scatterers_per_target,
                                        noise, spec.algorithms, spec.solver)
                res = np.array(_map(worker, [spec.seed(i) for i in range(spec.trials)],
                                    spec.workers))  # trial x algorithm x (exact, hit)
                for j, alg in enumerate(spec.algorithms):
                    if snr is None:
                        rows.append(MetricsRow(alg.value, setting.label, k, None,
                                               "exact_recovery_rate",
                                               float(res[:, j, 0].mean()), spec.trials))
                    else:
                        rows.append(MetricsRow(alg.value, setting.label, k, snr, "hit_rate",
                                               float(res[:, j, 1].mean()), spec.trials))
    return rows


def run_exact_rate_experiment(spec: ExperimentSpec) -> list[MetricsRow]:
    """Noiseless exact-support recovery rate per algorithm and block count."""
    return _run_cells(spec, [None])


def run_hit_rate_experiment(spec: ExperimentSpec) -> list[MetricsRow]:
    """Mean hit rate on the (K, SNR) grid with ``SNR = 10 log10(1 / sigma^2)``."""
    if any(k < 1 for k in spec.k_range):
        raise ValueError("hit rate needs at least one target per cell")
    return _run_cells(spec, spec.snr_range_db)


# -- one-shot analysis -------------------------------------------------------

@dataclass(frozen=True)
class AnalysisReport:
    params: RadarParams
    seed: int | None
    block_sparsity: int
    epsilon: float
    coherence: CoherenceReport
    theorem1: Theorem1Result
    theorem3: SparsityBound

    def to_dict(self) -> dict:
        p = self.params
        return {
            "params": {"n_pulses": p.n_pulses, "n_freqs": p.n_freqs,
                       "freq_step": p.freq_step, "carrier": p.carrier, "pri": p.pri},
            "seed": self.seed,
            "block_sparsity": self.block_sparsity,
            "epsilon": self.epsilon,
            "coherence": self.coherence.to_dict(),
            "theorem1": {"lhs": self.theorem1.lhs, "satisfied": self.theorem1.satisfied,
                         "terms": list(self.theorem1.terms)},
            "theorem3": {"k_max": self.theorem3.k_max, "delta1": self.theorem3.delta1,
                         "delta2": self.theorem3.delta2, "vacuous": self.theorem3.vacuous,
                         "raw_bound": self.theorem3.raw_bound},
        }

    @classmethod
    def from_dict(cls, d: dict) -> "AnalysisReport":
        t1, t3 = d["theorem1"], d["theorem3"]
        return cls(
            params=RadarParams(**d["params"]),
            seed=d["seed"],
            block_sparsity=int(d["block_sparsity"]),
            epsilon=float(d["epsilon"]),
            coherence=CoherenceReport.from_dict(d["coherence"]),
            theorem1=Theorem1Result(float(t1["lhs"]), bool(t1["satisfied"]),
                                    tuple(float(v) for v in t1["terms"])),
            theorem3=SparsityBound(int(t3["k_max"]), float(t3["delta1"]),
                                   float(t3["delta2"]), bool(t3["vacuous"]),
                                   float(t3["raw_bound"])),
        )


def run_analysis(params: RadarParams, codes: FrequencyCodes | None = None,
                 seed: int | None = 0, mode: DopplerMode = DopplerMode.SIMPLIFIED,
                 block_sparsity: int = 1, epsilon: float = 0.1) -> AnalysisReport:
    """Coherence report plus both recovery guarantees for one code draw."""
    if codes is None:
        codes = draw_codes(params, seed)
    matrix = build_observation_matrix(params, codes, mode)
    report = coherence_report(matrix)
    t1 = theorem1_condition(GuaranteeInputs(report.mu_intra, report.mu_inter,
                                            report.spectral_norm, block_sparsity,
                                            params.n_freqs, params.n_pulses))
    t3 = theorem3_sparsity_bound(params.n_freqs, params.n_pulses, epsilon)
    return AnalysisReport(params, codes.seed, block_sparsity, epsilon, report, t1, t3)


def bound_table(ms: Sequence[int], ns: Sequence[int], epsilons: Sequence[float],
                mu_intra: float | None = None, mu_inter: float | None = None,
                block_sparsity: int = 1) -> list[dict]:
    """Sparsity-bound rows; adds the block-incoherence lhs when coherences are given.

    The spectral norm in the condition is taken as ``sqrt(M)``.
    """
    rows = []
    for m in ms:
        for n in ns:
            for eps in epsilons:
                b = theorem3_sparsity_bound(m, n, eps)
                row = {"M": m, "N": n, "epsilon": eps, "delta1": b.delta1,
                       "delta2": b.delta2, "k_max": b.k_max, "vacuous": b.vacuous}
                if mu_intra is not None and mu_inter is not None:
                    t1 = theorem1_condition(GuaranteeInputs(
                        mu_intra, mu_inter, math.sqrt(m), min(block_sparsity, n), m, n))
                    row["theorem1_lhs"] = t1.lhs
                    row["theorem1_satisfied"] = t1.satisfied
                rows.append(row)
    return rows


def desk_scale(kind: ExperimentKind, **overrides) -> ExperimentSpec:
    """Default run sizes that finish in minutes on one core."""
    kind = ExperimentKind(kind)
    base = dict(kind=kind, base_seed=0)
    if kind is ExperimentKind.CCDF:
        base.update(params=RadarParams(32, 4), trials=1000,
                    modes=(ModeSetting(DopplerMode.SIMPLIFIED),
                           ModeSetting(DopplerMode.EXACT, 0.01),
                           ModeSetting(DopplerMode.EXACT, 0.1)))
    elif kind is ExperimentKind.EXACT_RATE:
        base.update(params=RadarParams(64, 8), trials=200, k_range=tuple(range(1, 9)),
                    algorithms=(Algorithm.OMP, Algorithm.BLOCK_OMP, Algorithm.BP,
                                Algorithm.BLOCK_BP))
    else:
        base.update(params=RadarParams(64, 8), trials=200, k_range=tuple(range(1, 7)),
                    snr_range_db=(0.0, 5.0, 10.0, 15.0),
                    algorithms=(Algorithm.LASSO, Algorithm.BLOCK_LASSO))
    base.update(overrides)
    return ExperimentSpec(**base)


def paper_scale(kind: ExperimentKind, **overrides) -> ExperimentSpec:
    """Full-size runs: N = 128, M = 8, 1000 trials per cell."""
    kind = ExperimentKind(kind)
    spec = desk_scale(kind)
    changes = dict(trials=1000)
    if kind is ExperimentKind.EXACT_RATE:
        changes.update(params=RadarParams(128, 8), k_range=tuple(range(1, 13)))
    elif kind is ExperimentKind.HIT_RATE:
        changes.update(params=RadarParams(128, 8), k_range=tuple(range(1, 13)),
                       snr_range_db=tuple(np.arange(-5.0, 20.01, 2.5).tolist()),
                       algorithms=(Algorithm.OMP, Algorithm.BLOCK_OMP, Algorithm.LASSO,
                                   Algorithm.BLOCK_LASSO))
    changes.update(overrides)
    return replace(spec, **changes)
