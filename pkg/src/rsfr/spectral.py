"""Gram-block spectra, block coherence and spectral norm of ``Psi``.

With ``xi_n = 1`` every Gram block ``Psi_q1^H Psi_q2`` is circulant and
depends only on ``dq = q2 - q1``; its eigenvalues are

    lambda_m(dq) = (M / N) * sum_n [C_n == m] * exp(j 2 pi dq n / N)

so the block coherences reduce to maxima over an ``N x M`` table computed
with one inverse FFT. The numeric routines below work for any matrix and
serve as oracles for the closed forms.
"""
from __future__ import annotations

import enum
from dataclasses import asdict, dataclass

import numpy as np

from .core import DopplerMode, FrequencyCodes, ObservationMatrix

__all__ = [
    "Method",
    "GramBlock",
    "BlockSpectrum",
    "CoherenceReport",
    "gram_block",
    "circulant_eigenvalues",
    "block_eigenvalues_closed_form",
    "eigenvalue_table",
    "intra_block_coherence",
    "inter_block_coherence",
    "spectral_norm",
    "full_gram_eigenvalues",
    "coherence_report",
]


class Method(str, enum.Enum):
    CLOSED_FORM = "closed_form"
    NUMERIC_SVD = "numeric_svd"


@dataclass(frozen=True, eq=False)
class GramBlock:
    block: np.ndarray
    dq: int


@dataclass(frozen=True, eq=False)
class BlockSpectrum:
    """Eigenvalues of ``X_{q,q+dq}`` and singular values of its centred variant."""

    eigenvalues: np.ndarray
    singular_values: np.ndarray
    dq: int


@dataclass(frozen=True)
class CoherenceReport:
    mu_intra: float
    mu_inter: float
    spectral_norm: float
    mode: DopplerMode
    method: Method

    def to_dict(self) -> dict:
        d = asdict(self)
        d["mode"] = DopplerMode(self.mode).value
        d["method"] = Method(self.method).value
        return d

    @classmethod
    def from_dict(cls, d: dict) -> "CoherenceReport":
        return cls(float(d["mu_intra"]), float(d["mu_inter"]), float(d["spectral_norm"]),
                   DopplerMode(d["mode"]), Method(d["method"]))


def gram_block(matrix: ObservationMatrix, q1: int, q2: int) -> GramBlock:
    """Numeric ``Psi_q1^H Psi_q2``; valid in either Doppler mode."""
    a, b = matrix.block(q1), matrix.block(q2)
    return GramBlock(a.conj().T @ b, q2 - q1)


def circulant_eigenvalues(first_row: np.ndarray) -> np.ndarray:
    """Eigenvalues of the circulant matrix whose first row is ``first_row``.

    Row ``i`` of the matrix is ``first_row`` shifted right by ``i``; the
    eigenvalue paired with Fourier vector ``m`` is the DFT of the row at ``m``.
    """
    return np.fft.fft(np.asarray(first_row))


def _centred_singular_values(eig: np.ndarray, dq: int) -> np.ndarray:
    return np.abs(eig - 1.0) if dq == 0 else np.abs(eig)


def block_eigenvalues_closed_form(codes: FrequencyCodes, dq: int) -> BlockSpectrum:
    """Eigenvalues of the ``dq`` Gram block straight from the code sequence."""
    n, m = codes.n_pulses, codes.n_freqs
    dq_wrapped = int(dq) % n
    phasor = np.exp(2j * np.pi * dq_wrapped * np.arange(n) / n)
    # zeta[n, m] = [C_n == m], summed per m
    eig = np.zeros(m, dtype=complex)
    np.add.at(eig, codes.codes, phasor)
    eig *= m / n
    return BlockSpectrum(eig, _centred_singular_values(eig, dq_wrapped), int(dq))


def eigenvalue_table(codes: FrequencyCodes) -> np.ndarray:
    """All closed-form eigenvalues at once; row ``dq``, column ``m``."""
    return codes.n_freqs * np.fft.ifft(codes.indicator(), axis=0)


def _check_closed_form(mode, method, matrix):
    if method is None:
        method = Method.CLOSED_FORM if matrix is None else Method.NUMERIC_SVD
    method = Method(method)
    mode = DopplerMode(mode)
    if method is Method.CLOSED_FORM and mode is not DopplerMode.SIMPLIFIED:
        raise ValueError("closed-form coherence is only available with xi_n = 1 "
                         "(simplified Doppler mode)")
    if method is Method.NUMERIC_SVD and matrix is None:
        raise ValueError("numeric coherence needs the observation matrix")
    return method


def _block_gram_tensor(matrix: ObservationMatrix) -> np.ndarray:
    """``G[q1, q2] = Psi_q1^H Psi_q2`` as an ``N x N x M x M`` array."""
    n, m = matrix.n_blocks, matrix.block_size
    blocks = matrix.entries.reshape(matrix.shape[0], n, m)
    return np.einsum("kap,kbr->abpr", blocks.conj(), blocks, optimize=True)


def intra_block_coherence(codes: FrequencyCodes,
                          mode: DopplerMode = DopplerMode.SIMPLIFIED,
                          matrix: ObservationMatrix | None = None,
                          method: Method | None = None) -> float:
    """``mu_I = max_q ||Psi_q^H Psi_q - I||_2``."""
    method = _check_closed_form(mode, method, matrix)
    if method is Method.CLOSED_FORM:
        eig0 = block_eigenvalues_closed_form(codes, 0).singular_values
        return float(eig0.max())
    n, m = matrix.n_blocks, matrix.block_size
    blocks = matrix.entries.reshape(matrix.shape[0], n, m)
    grams = np.einsum("kap,kar->apr", blocks.conj(), blocks) - np.eye(m)
    return float(np.linalg.norm(grams, ord=2, axis=(1, 2)).max())


def inter_block_coherence(codes: FrequencyCodes,
                          mode: DopplerMode = DopplerMode.SIMPLIFIED,
                          matrix: ObservationMatrix | None = None,
                          method: Method | None = None) -> float:
    """``mu_B = max_{q1 != q2} ||Psi_q1^H Psi_q2||_2``.

    The closed form only scans ``dq = 1 .. N // 2`` since the singular
    values are symmetric in ``dq`` and periodic in ``N``.
    """
    method = _check_closed_form(mode, method, matrix)
    n = codes.n_pulses if matrix is None else matrix.n_blocks
    if n == 1:
        return 0.0
    if method is Method.CLOSED_FORM:
        table = eigenvalue_table(codes)
        return float(np.abs(table[1:n // 2 + 1]).max())
    grams = _block_gram_tensor(matrix)
    off = ~np.eye(n, dtype=bool)
    return float(np.linalg.norm(grams[off], ord=2, axis=(1, 2)).max())


def spectral_norm(matrix: ObservationMatrix, method: Method | None = None) -> float:
    """Largest singular value of ``Psi``; exactly ``sqrt(M)`` when ``xi_n = 1``."""
    if method is None:
        method = (Method.CLOSED_FORM if matrix.mode is DopplerMode.SIMPLIFIED
                  else Method.NUMERIC_SVD)
    method = Method(method)
    if method is Method.CLOSED_FORM:
        if matrix.mode is not DopplerMode.SIMPLIFIED:
            raise ValueError("closed-form spectral norm requires simplified Doppler mode")
        return float(np.sqrt(matrix.block_size))
    return float(np.linalg.norm(matrix.entries, 2))


def full_gram_eigenvalues(codes: FrequencyCodes) -> np.ndarray:
    """Eigenvalues of ``Psi^H Psi`` indexed ``l = q*M + m``.

    ``lambda_l = M`` when ``C_{(N - q) mod N} == m`` and 0 otherwise.
    """
    n, m = codes.n_pulses, codes.n_freqs
    src = codes.codes[(n - np.arange(n)) % n]
    lam = np.zeros((n, m))
    lam[np.arange(n), src] = m
    return lam.ravel()


def coherence_report(matrix: ObservationMatrix, method: Method | None = None) -> CoherenceReport:
    """Coherences and spectral norm of ``matrix`` in one record.

    Defaults to the closed forms in simplified mode and SVDs otherwise.
    """
    if method is None:
        method = (Method.CLOSED_FORM if matrix.mode is DopplerMode.SIMPLIFIED
                  else Method.NUMERIC_SVD)
    method = Method(method)
    mat = None if method is Method.CLOSED_FORM else matrix
    return CoherenceReport(
        mu_intra=intra_block_coherence(matrix.codes, matrix.mode, mat, method),
        mu_inter=inter_block_coherence(matrix.codes, matrix.mode, mat, method),
        spectral_norm=spectral_norm(matrix, method),
        mode=matrix.mode,
        method=method,
    )
