import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st
from scipy.optimize import linear_sum_assignment

from rsfr.core import DopplerMode, RadarParams, build_observation_matrix, codes_from_sequence, draw_codes
from rsfr.spectral import (CoherenceReport, Method, block_eigenvalues_closed_form,
                           circulant_eigenvalues, coherence_report, eigenvalue_table,
                           full_gram_eigenvalues, gram_block, inter_block_coherence,
                           intra_block_coherence, spectral_norm)

from conftest import make_matrix

seeds = st.integers(0, 2 ** 31)


def multiset_distance(a, b):
    """Largest pairwise gap under the best one-to-one matching."""
    cost = np.abs(np.subtract.outer(np.asarray(a), np.asarray(b)))
    rows, cols = linear_sum_assignment(cost)
    return cost[rows, cols].max()


def is_circulant(block, tol):
    m = block.shape[0]
    first = block[0]
    return all(np.max(np.abs(block[i] - np.roll(first, i))) < tol for i in range(m))


class TestGramBlocks:
    def test_single_frequency_block_is_one(self):
        psi = make_matrix(8, 1, seed=3)
        np.testing.assert_allclose(gram_block(psi, 2, 2).block, [[1.0]], atol=1e-15)

    def test_depends_only_on_offset(self):
        psi = make_matrix(8, 4, seed=1)
        np.testing.assert_allclose(gram_block(psi, 2, 5).block, gram_block(psi, 0, 3).block,
                                   atol=1e-12)
        g = gram_block(psi, 0, 3).block
        assert abs(g[1, 3] - g[0, 2]) < 1e-12

    @given(st.integers(2, 12), st.integers(1, 5), seeds)
    def test_circulant_and_block_circulant(self, n, m, seed):
        psi = make_matrix(n, m, seed)
        for q1 in range(n):
            for q2 in range(n):
                g = gram_block(psi, q1, q2).block
                assert is_circulant(g, 1e-12)
                ref = gram_block(psi, 0, (q2 - q1) % n).block
                assert np.max(np.abs(g - ref)) < 1e-12

    def test_exact_mode_blocks_are_numeric_only(self):
        psi = make_matrix(16, 4, 0, DopplerMode.EXACT, carrier=1e9)
        g = gram_block(psi, 0, 1)
        assert g.block.shape == (4, 4) and g.dq == 1


class TestClosedForm:
    def test_zero_codes_same_block(self):
        codes = codes_from_sequence([0, 0, 0, 0], 2)
        np.testing.assert_allclose(block_eigenvalues_closed_form(codes, 0).eigenvalues,
                                   [2, 0], atol=1e-15)

    def test_zero_codes_full_period_sum(self):
        codes = codes_from_sequence([0, 0, 0, 0], 2)
        np.testing.assert_allclose(block_eigenvalues_closed_form(codes, 1).eigenvalues,
                                   [0, 0], atol=1e-15)

    @pytest.mark.parametrize("seed", range(5))
    def test_matches_dense_eigendecomposition(self, seed):
        psi = make_matrix(16, 4, seed)
        for dq in range(9):
            closed = block_eigenvalues_closed_form(psi.codes, dq).eigenvalues
            dense = np.linalg.eigvals(gram_block(psi, 0, dq).block)
            assert multiset_distance(closed, dense) < 1e-10

    @given(st.integers(1, 16), st.integers(1, 6), seeds, st.integers(-20, 20))
    def test_dft_of_first_row(self, n, m, seed, dq):
        psi = make_matrix(n, m, seed)
        first_row = gram_block(psi, 0, dq % n).block[0]
        np.testing.assert_allclose(circulant_eigenvalues(first_row),
                                   block_eigenvalues_closed_form(psi.codes, dq).eigenvalues,
                                   atol=1e-12)

    @given(st.integers(1, 16), st.integers(1, 6), seeds)
    def test_table_matches_per_offset(self, n, m, seed):
        codes = draw_codes(RadarParams(n, m), seed)
        table = eigenvalue_table(codes)
        for dq in range(n):
            np.testing.assert_allclose(table[dq],
                                       block_eigenvalues_closed_form(codes, dq).eigenvalues,
                                       atol=1e-12)

    @given(st.integers(1, 16), st.integers(1, 6), seeds, st.integers(0, 40))
    def test_conjugate_symmetry_and_period(self, n, m, seed, dq):
        codes = draw_codes(RadarParams(n, m), seed)
        lam = block_eigenvalues_closed_form(codes, dq).eigenvalues
        neg = block_eigenvalues_closed_form(codes, -dq).eigenvalues
        assert np.max(np.abs(lam - neg.conj())) < 1e-12
        shifted = block_eigenvalues_closed_form(codes, dq + n).eigenvalues
        assert np.array_equal(lam, shifted)

    @pytest.mark.parametrize("seed", range(3))
    def test_numeric_conjugate_symmetry(self, seed):
        psi = make_matrix(12, 3, seed)
        for dq in range(1, 12):
            a = np.linalg.svd(gram_block(psi, 0, dq).block, compute_uv=False)
            b = np.linalg.svd(gram_block(psi, dq, 0).block, compute_uv=False)
            assert np.max(np.abs(a - b)) < 1e-12

    @given(st.integers(2, 16), st.integers(1, 5), seeds)
    def test_singular_values_of_centred_blocks(self, n, m, seed):
        psi = make_matrix(n, m, seed)
        for dq in range(n):
            g = gram_block(psi, 0, dq).block
            if dq == 0:
                g = g - np.eye(m)
            numeric = np.sort(np.linalg.svd(g, compute_uv=False))
            closed = np.sort(block_eigenvalues_closed_form(psi.codes, dq).singular_values)
            assert np.max(np.abs(numeric - closed)) < 1e-10


class TestCoherence:
    def test_single_frequency(self):
        codes = draw_codes(RadarParams(20, 1), 0)
        assert intra_block_coherence(codes) == 0.0

    @pytest.mark.parametrize("n", [2, 5, 16])
    def test_zero_codes_intra(self, n):
        codes = codes_from_sequence([0] * n, 2)
        assert intra_block_coherence(codes) == pytest.approx(1.0, abs=1e-12)
        psi = build_observation_matrix(RadarParams(n, 2), codes)
        # X_qq is the all-ones 2x2 matrix; X - I has singular values {1, 1}
        np.testing.assert_allclose(gram_block(psi, 0, 0).block, np.ones((2, 2)), atol=1e-12)
        assert intra_block_coherence(codes, matrix=psi) == pytest.approx(1.0, abs=1e-12)

    def test_zero_codes_inter(self):
        codes = codes_from_sequence([0] * 4, 2)
        psi = build_observation_matrix(RadarParams(4, 2), codes)
        assert inter_block_coherence(codes) == pytest.approx(0.0, abs=1e-12)
        assert inter_block_coherence(codes, matrix=psi) == pytest.approx(0.0, abs=1e-12)

    def test_single_pulse_has_no_inter_blocks(self):
        codes = draw_codes(RadarParams(1, 4), 0)
        assert inter_block_coherence(codes) == 0.0

    @pytest.mark.parametrize("seed", range(4))
    def test_closed_form_matches_numeric(self, seed):
        psi = make_matrix(32, 4, seed)
        assert abs(intra_block_coherence(psi.codes)
                   - intra_block_coherence(psi.codes, matrix=psi)) < 1e-10
        assert abs(inter_block_coherence(psi.codes)
                   - inter_block_coherence(psi.codes, matrix=psi)) < 1e-10

    @given(st.integers(2, 12), st.integers(1, 4), seeds)
    def test_closed_form_matches_numeric_property(self, n, m, seed):
        psi = make_matrix(n, m, seed)
        assert abs(intra_block_coherence(psi.codes)
                   - intra_block_coherence(psi.codes, matrix=psi)) < 1e-10
        assert abs(inter_block_coherence(psi.codes)
                   - inter_block_coherence(psi.codes, matrix=psi)) < 1e-10

    def test_intra_is_unaffected_by_doppler_scaling(self):
        exact = make_matrix(24, 4, 3, DopplerMode.EXACT, carrier=2e8)
        numeric = intra_block_coherence(exact.codes, DopplerMode.EXACT, exact,
                                        Method.NUMERIC_SVD)
        assert abs(numeric - intra_block_coherence(exact.codes)) < 1e-10

    def test_closed_form_rejected_in_exact_mode(self):
        codes = draw_codes(RadarParams(8, 2), 0)
        with pytest.raises(ValueError):
            intra_block_coherence(codes, DopplerMode.EXACT)
        with pytest.raises(ValueError):
            inter_block_coherence(codes, DopplerMode.EXACT, method=Method.CLOSED_FORM)
        with pytest.raises(ValueError):
            intra_block_coherence(codes, method=Method.NUMERIC_SVD)


class TestSpectralNorm:
    def test_closed_form_values(self):
        assert spectral_norm(make_matrix(16, 4, 0)) == 2.0
        assert spectral_norm(make_matrix(16, 1, 0)) == 1.0

    @pytest.mark.parametrize("seed", range(3))
    def test_numeric_equals_sqrt_m(self, seed):
        psi = make_matrix(16, 3, seed)
        assert abs(spectral_norm(psi, Method.NUMERIC_SVD) - np.sqrt(3)) < 1e-9

    @given(st.integers(1, 24), st.integers(1, 6), seeds)
    def test_sqrt_m_for_every_draw(self, n, m, seed):
        psi = make_matrix(n, m, seed)
        assert abs(np.linalg.norm(psi.entries, 2) - np.sqrt(m)) < 1e-9
        np.testing.assert_allclose(psi.entries @ psi.entries.conj().T, m * np.eye(n),
                                   atol=1e-10)

    def test_exact_mode_is_numeric(self):
        psi = make_matrix(32, 4, 0, DopplerMode.EXACT, carrier=4 * 30e6 / 0.1)
        assert spectral_norm(psi) == pytest.approx(np.linalg.norm(psi.entries, 2), abs=1e-12)
        with pytest.raises(ValueError):
            spectral_norm(psi, Method.CLOSED_FORM)


class TestFullGram:
    def test_count_of_nonzero_eigenvalues(self):
        lam = full_gram_eigenvalues(draw_codes(RadarParams(16, 4), 2))
        assert lam.size == 64 and np.count_nonzero(lam == 4) == 16
        assert np.count_nonzero(lam == 0) == 48

    @pytest.mark.parametrize("seed", range(3))
    def test_matches_dense_eigenvalues(self, seed):
        psi = make_matrix(8, 2, seed)
        dense = np.linalg.eigvalsh(psi.entries.conj().T @ psi.entries)
        np.testing.assert_allclose(np.sort(full_gram_eigenvalues(psi.codes)), dense, atol=1e-9)

    def test_zero_codes(self):
        lam = full_gram_eigenvalues(codes_from_sequence([0] * 5, 3)).reshape(5, 3)
        assert np.all(lam[:, 0] == 3) and np.all(lam[:, 1:] == 0)


class TestReport:
    def test_round_trip(self):
        report = coherence_report(make_matrix(16, 4, 0))
        assert report.method is Method.CLOSED_FORM and report.spectral_norm == 2.0
        assert CoherenceReport.from_dict(report.to_dict()) == report
        assert set(report.to_dict()) == {"mu_intra", "mu_inter", "spectral_norm", "mode",
                                         "method"}

    def test_exact_mode_uses_svd(self):
        report = coherence_report(make_matrix(16, 4, 0, DopplerMode.EXACT, carrier=1.2e9))
        assert report.method is Method.NUMERIC_SVD and report.mode is DopplerMode.EXACT
