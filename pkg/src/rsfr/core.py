"""Signal model of a randomized stepped-frequency radar.

The slow-time echo of a coherent processing interval is written as
``y = Psi @ x + w`` where ``Psi`` is the ``N x MN`` observation matrix built
from the random frequency codes and ``x`` stacks one length-``M`` range
profile per velocity cell.
"""
from __future__ import annotations

import enum
from dataclasses import dataclass
from typing import Iterable, Sequence

import numpy as np

__all__ = [
    "DopplerMode",
    "RadarParams",
    "FrequencyCodes",
    "ObservationMatrix",
    "Target",
    "TargetScene",
    "BlockSparseVector",
    "Measurement",
    "draw_codes",
    "doppler_factors",
    "build_observation_matrix",
    "observation_entries",
    "synthesize_scene",
    "scene_to_vector",
    "synthesize_measurement",
    "snr_to_noise_power",
    "noise_power_to_snr",
    "stream_rng",
    "codes_from_sequence",
]

# Sub-stream keys; one base seed feeds independent generators for each
# random component of a trial.
CODE_STREAM = 0
SCENE_STREAM = 1
NOISE_STREAM = 2


def stream_rng(seed: int, stream: int) -> np.random.Generator:
    """Generator for sub-stream ``stream`` of base ``seed``."""
    if seed < 0:
        raise ValueError(f"seed must be nonnegative, got {seed}")
    return np.random.default_rng(np.random.SeedSequence([int(seed), int(stream)]))


def _frozen(a: np.ndarray) -> np.ndarray:
    a = np.array(a, copy=True)
    a.setflags(write=False)
    return a


class DopplerMode(str, enum.Enum):
    """How the Doppler scaling ``xi_n`` of each pulse is modelled."""

    EXACT = "exact"
    SIMPLIFIED = "simplified"


@dataclass(frozen=True)
class RadarParams:
    """Waveform parameters of one coherent processing interval.

    Defaults are the simulation settings f_c = 9 GHz, T_r = 20 us,
    df = 30 MHz, M = 8, N = 128.
    """

    n_pulses: int = 128
    n_freqs: int = 8
    freq_step: float = 30e6
    carrier: float = 9e9
    pri: float = 20e-6

    def __post_init__(self):
        for name in ("n_pulses", "n_freqs"):
            v = getattr(self, name)
            if isinstance(v, bool) or int(v) != v or v < 1:
                raise ValueError(f"{name} must be a positive integer, got {v!r}")
            object.__setattr__(self, name, int(v))
        for name in ("freq_step", "carrier", "pri"):
            v = float(getattr(self, name))
            if not np.isfinite(v) or v <= 0:
                raise ValueError(f"{name} must be positive and finite, got {v!r}")
            object.__setattr__(self, name, v)

    @property
    def bandwidth(self) -> float:
        """Synthetic bandwidth ``M * df`` in Hz."""
        return self.n_freqs * self.freq_step

    def relative_bandwidth(self) -> float:
        return self.bandwidth / self.carrier

    def with_relative_bandwidth(self, rb: float) -> "RadarParams":
        """Copy with the carrier chosen so that ``M * df / f_c == rb``."""
        if not rb > 0:
            raise ValueError(f"relative bandwidth must be positive, got {rb!r}")
        return RadarParams(self.n_pulses, self.n_freqs, self.freq_step,
                           self.bandwidth / rb, self.pri)

    @property
    def n_columns(self) -> int:
        return self.n_pulses * self.n_freqs


@dataclass(frozen=True)
class FrequencyCodes:
    """Per-pulse frequency indices ``C_n`` in ``{0, ..., M-1}``."""

    codes: np.ndarray
    n_freqs: int
    seed: int | None = None

    def __post_init__(self):
        codes = np.asarray(self.codes)
        if codes.ndim != 1 or codes.size == 0:
            raise ValueError("codes must be a nonempty 1-D sequence")
        if not np.issubdtype(codes.dtype, np.integer):
            if not np.all(np.equal(np.mod(codes, 1), 0)):
                raise ValueError("codes must be integers")
        codes = codes.astype(np.int64)
        if codes.min() < 0 or codes.max() >= self.n_freqs:
            raise ValueError(f"codes must lie in [0, {self.n_freqs - 1}]")
        object.__setattr__(self, "codes", _frozen(codes))

    def __len__(self):
        return self.codes.size

    def __eq__(self, other):
        if not isinstance(other, FrequencyCodes):
            return NotImplemented
        return (self.n_freqs == other.n_freqs and self.seed == other.seed
                and np.array_equal(self.codes, other.codes))

    __hash__ = None

    @property
    def n_pulses(self) -> int:
        return self.codes.size

    def indicator(self) -> np.ndarray:
        """``N x M`` 0/1 matrix with entry ``(n, m) = [C_n == m]``."""
        z = np.zeros((self.n_pulses, self.n_freqs))
        z[np.arange(self.n_pulses), self.codes] = 1.0
        return z


def draw_codes(params: RadarParams, seed: int) -> FrequencyCodes:
    """Draw ``N`` i.i.d. uniform frequency codes from a seeded generator."""
    rng = stream_rng(seed, CODE_STREAM)
    codes = rng.integers(0, params.n_freqs, size=params.n_pulses)
    return FrequencyCodes(codes, params.n_freqs, seed)


def doppler_factors(params: RadarParams, codes: FrequencyCodes,
                    mode: DopplerMode) -> np.ndarray:
    """Per-pulse Doppler scaling ``xi_n``."""
    mode = DopplerMode(mode)
    if mode is DopplerMode.SIMPLIFIED:
        return np.ones(codes.n_pulses)
    return 1.0 + codes.codes * (params.freq_step / params.carrier)


@dataclass(frozen=True, eq=False)
class ObservationMatrix:
    """Dense observation matrix together with the data that generated it.

    Column ``q*M + p`` is the unit-norm steering vector of range cell ``p``
    and velocity cell ``q``.
    """

    entries: np.ndarray
    params: RadarParams
    codes: FrequencyCodes
    mode: DopplerMode

    @property
    def shape(self):
        return self.entries.shape

    @property
    def block_size(self) -> int:
        return self.params.n_freqs

    @property
    def n_blocks(self) -> int:
        return self.params.n_pulses

    def block(self, q: int) -> np.ndarray:
        if not 0 <= q < self.n_blocks:
            raise IndexError(f"block index {q} out of range [0, {self.n_blocks})")
        m = self.block_size
        return self.entries[:, q * m:(q + 1) * m]

    def column(self, p: int, q: int) -> np.ndarray:
        return self.block(q)[:, p]

    def __matmul__(self, x):
        return self.entries @ np.asarray(getattr(x, "values", x))


def build_observation_matrix(params: RadarParams, codes: FrequencyCodes,
                             mode: DopplerMode = DopplerMode.SIMPLIFIED
                             ) -> ObservationMatrix:
    """Form ``Psi`` with entries ``exp(j2pi p C_n / M + j2pi q xi_n n / N) / sqrt(N)``."""
    n, m = params.n_pulses, params.n_freqs
    if codes.n_pulses != n or codes.n_freqs != m:
        raise ValueError(
            f"codes (N={codes.n_pulses}, M={codes.n_freqs}) do not match "
            f"params (N={n}, M={m})")
    mode = DopplerMode(mode)
    entries = observation_entries(codes, doppler_factors(params, codes, mode))
    return ObservationMatrix(_frozen(entries), params, codes, mode)


def observation_entries(codes: FrequencyCodes, xi: np.ndarray) -> np.ndarray:
    """Raw ``N x MN`` entries for given per-pulse Doppler factors ``xi``."""
    n, m = codes.n_pulses, codes.n_freqs
    xi = np.asarray(xi, dtype=float)
    if xi.shape != (n,):
        raise ValueError(f"xi must have shape ({n},)")
    # phase[n, q, p]
    range_phase = np.outer(codes.codes, np.arange(m)) / m
    doppler_phase = np.outer(xi * np.arange(n), np.arange(n)) / n
    phase = doppler_phase[:, :, None] + range_phase[:, None, :]
    return np.exp(2j * np.pi * phase).reshape(n, n * m) / np.sqrt(n)


@dataclass(frozen=True)
class Target:
    """Extended target: one velocity cell, several range cells."""

    velocity_index: int
    scatterers: tuple[tuple[int, complex], ...]

    def __post_init__(self):
        object.__setattr__(self, "velocity_index", int(self.velocity_index))
        object.__setattr__(self, "scatterers",
                           tuple((int(p), complex(a)) for p, a in self.scatterers))


@dataclass(frozen=True)
class TargetScene:
    targets: tuple[Target, ...] = ()

    def __post_init__(self):
        targets = tuple(self.targets)
        object.__setattr__(self, "targets", targets)
        seen = set()
        for t in targets:
            for p, _ in t.scatterers:
                cell = (p, t.velocity_index)
                if cell in seen:
                    raise ValueError(f"duplicate scatterer placement at (p, q) = {cell}")
                seen.add(cell)

    @property
    def n_targets(self) -> int:
        return len(self.targets)

    @property
    def n_scatterers(self) -> int:
        return sum(len(t.scatterers) for t in self.targets)

    def cells(self) -> list[tuple[int, int]]:
        return [(p, t.velocity_index) for t in self.targets for p, _ in t.scatterers]


def synthesize_scene(params: RadarParams, n_targets: int, scatterers_per_target: int,
                     rng_seed: int) -> TargetScene:
    """Random scene of ``K`` extended targets with ``P`` scatterers each.

    Velocity cells are drawn without replacement. Each target occupies ``P``
    consecutive range cells from a uniform random start, wrapping modulo
    ``M``; amplitudes are i.i.d. CN(0, 1).
    """
    k, p_count = int(n_targets), int(scatterers_per_target)
    n, m = params.n_pulses, params.n_freqs
    if k < 0 or k > n:
        raise ValueError(f"n_targets must lie in [0, {n}], got {k}")
    if k and not 1 <= p_count <= m:
        raise ValueError(f"scatterers_per_target must lie in [1, {m}], got {p_count}")
    rng = stream_rng(rng_seed, SCENE_STREAM)
    velocities = rng.choice(n, size=k, replace=False)
    targets = []
    for q in velocities:
        start = rng.integers(m)
        amps = (rng.standard_normal(p_count) + 1j * rng.standard_normal(p_count)) / np.sqrt(2)
        ranges = (start + np.arange(p_count)) % m
        targets.append(Target(int(q), tuple(zip(ranges.tolist(), amps.tolist()))))
    return TargetScene(tuple(targets))


@dataclass(frozen=True, eq=False)
class BlockSparseVector:
    """Scene vector ``x`` laid out as consecutive length-``block_size`` blocks."""

    values: np.ndarray
    block_size: int

    def __post_init__(self):
        v = np.asarray(self.values, dtype=complex)
        if v.ndim != 1 or v.size % self.block_size:
            raise ValueError("length must be a multiple of block_size")
        object.__setattr__(self, "values", _frozen(v))

    @property
    def n_blocks(self) -> int:
        return self.values.size // self.block_size

    def blocks(self) -> np.ndarray:
        return self.values.reshape(self.n_blocks, self.block_size)

    def support(self) -> frozenset[int]:
        return frozenset(np.flatnonzero(self.values).tolist())

    def block_support(self) -> frozenset[int]:
        return frozenset(np.flatnonzero(np.any(self.blocks() != 0, axis=1)).tolist())

    def as_grid(self) -> np.ndarray:
        """``M x N`` grid with row = range cell, column = velocity cell."""
        return self.blocks().T


def scene_to_vector(scene: TargetScene, params: RadarParams) -> BlockSparseVector:
    """Place ``sqrt(N) * amplitude`` at index ``q*M + p`` for every scatterer."""
    n, m = params.n_pulses, params.n_freqs
    x = np.zeros(n * m, dtype=complex)
    filled = np.zeros(n * m, dtype=bool)
    gain = np.sqrt(n)
    for t in scene.targets:
        q = t.velocity_index
        if not 0 <= q < n:
            raise ValueError(f"velocity index {q} outside [0, {n})")
        for p, amp in t.scatterers:
            if not 0 <= p < m:
                raise ValueError(f"range index {p} outside [0, {m})")
            i = q * m + p
            if filled[i]:
                raise ValueError(f"duplicate scatterer placement at (p, q) = ({p}, {q})")
            filled[i] = True
            x[i] = gain * amp
    return BlockSparseVector(x, m)


@dataclass(frozen=True, eq=False)
class Measurement:
    samples: np.ndarray
    noise_power: float = 0.0

    def __post_init__(self):
        object.__setattr__(self, "samples", _frozen(np.asarray(self.samples, dtype=complex)))


def synthesize_measurement(matrix: ObservationMatrix, x, noise_power: float = 0.0,
                           rng_seed: int = 0) -> Measurement:
    """``y = Psi x + w`` with ``w ~ CN(0, noise_power * I)``."""
    if noise_power < 0 or not np.isfinite(noise_power):
        raise ValueError(f"noise_power must be finite and nonnegative, got {noise_power}")
    values = np.asarray(getattr(x, "values", x), dtype=complex)
    psi = matrix.entries if isinstance(matrix, ObservationMatrix) else np.asarray(matrix)
    if values.shape != (psi.shape[1],):
        raise ValueError(f"x has shape {values.shape}, expected ({psi.shape[1]},)")
    y = psi @ values
    if noise_power > 0:
        rng = stream_rng(rng_seed, NOISE_STREAM)
        n = psi.shape[0]
        w = rng.standard_normal(n) + 1j * rng.standard_normal(n)
        y = y + np.sqrt(noise_power / 2) * w
    return Measurement(y, float(noise_power))


def snr_to_noise_power(snr_db: float) -> float:
    """Noise power for ``SNR = 10 log10(1 / sigma^2)``."""
    return float(10.0 ** (-snr_db / 10.0))


def noise_power_to_snr(noise_power: float) -> float:
    if noise_power <= 0:
        return float("inf")
    return float(-10.0 * np.log10(noise_power))


def codes_from_sequence(values: Sequence[int] | Iterable[int], n_freqs: int,
                        seed: int | None = None) -> FrequencyCodes:
    return FrequencyCodes(np.fromiter(values, dtype=np.int64), n_freqs, seed)
