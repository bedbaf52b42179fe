"""Randomized stepped-frequency radar: signal model, block-coherence analysis,
recovery guarantees and block-sparse reconstruction."""

__version__ = "0.1.0"

from .core import (DopplerMode, FrequencyCodes, Measurement, ObservationMatrix,  # noqa: E402
                   RadarParams, Target, TargetScene, BlockSparseVector,
                   build_observation_matrix, draw_codes, scene_to_vector,
                   snr_to_noise_power, synthesize_measurement, synthesize_scene)
from .spectral import (CoherenceReport, Method, block_eigenvalues_closed_form,  # noqa: E402
                       full_gram_eigenvalues, gram_block, inter_block_coherence,
                       intra_block_coherence, spectral_norm)
from .recovery import (RecoveryResult, SolverConfig, basis_pursuit_solve,  # noqa: E402
                       block_lasso_solve, block_omp, lasso_solve, matched_filter, omp)

__all__ = [
    "DopplerMode", "FrequencyCodes", "Measurement", "ObservationMatrix", "RadarParams",
    "Target", "TargetScene", "BlockSparseVector", "build_observation_matrix", "draw_codes",
    "scene_to_vector", "snr_to_noise_power", "synthesize_measurement", "synthesize_scene",
    "CoherenceReport", "Method", "block_eigenvalues_closed_form", "full_gram_eigenvalues",
    "gram_block", "inter_block_coherence", "intra_block_coherence", "spectral_norm",
    "RecoveryResult", "SolverConfig", "basis_pursuit_solve", "block_lasso_solve",
    "block_omp", "lasso_solve", "matched_filter", "omp",
]
