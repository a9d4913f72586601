import json

import numpy as np
import pytest
import scipy.linalg
from hypothesis import given, settings, strategies as st

import treegeom as tg
from treegeom.errors import InvalidArgumentError, ParseError
from treegeom.tensor import check_tensor, complement_modes, normalize_modes

from helpers import apply_single_mode_oracle, gauss_rank_exact, gauss_rank_float


small_shapes = st.lists(st.integers(2, 4), min_size=2, max_size=4).map(tuple)


def random_tensor(shape, seed=0):
    return np.random.default_rng(seed).standard_normal(shape)


class TestMatricize:
    def test_elementary_basis_tensor(self):
        e = np.zeros(2)
        e[0] = 1.0
        v = tg.tensor_product([e, e, e])
        M = tg.matricize(v, (1,))
        assert M.shape == (2, 4)
        expected = np.zeros((2, 4))
        expected[0, 0] = 1.0
        assert np.array_equal(M, expected)

    def test_elementary_is_rank_one_for_every_subset(self, rng):
        x, y, z = rng.standard_normal(2), rng.standard_normal(3), rng.standard_normal(4)
        v = tg.tensor_product([x, y, z])
        for alpha in [(1,), (2,), (3,), (1, 2), (1, 3), (2, 3)]:
            M = tg.matricize(v, alpha)
            s = np.linalg.svd(M, compute_uv=False)
            assert np.sum(s > 1e-12 * s[0]) == 1

    def test_rank_matches_elimination_oracle(self, rng):
        v = rng.standard_normal((2, 3, 4))
        M = tg.matricize(v, (2, 3))
        s = np.linalg.svd(M, compute_uv=False)
        svd_r = int(np.sum(s > 1e-10 * s[0]))
        assert svd_r == gauss_rank_float(M, tol=1e-10)

    def test_full_mode_set_gives_column_vector(self, rng):
        v = rng.standard_normal((2, 3))
        M = tg.matricize(v, (1, 2))
        assert M.shape == (6, 1)
        assert np.array_equal(M.ravel(), v.ravel())

    def test_rejects_empty_and_out_of_range(self):
        v = np.ones((2, 2))
        with pytest.raises(InvalidArgumentError):
            tg.matricize(v, ())
        with pytest.raises(InvalidArgumentError):
            tg.matricize(v, (3,))

    @given(small_shapes, st.integers(0, 1000), st.data())
    @settings(max_examples=30, deadline=None)
    def test_isometry(self, shape, seed, data):
        v = random_tensor(shape, seed)
        d = len(shape)
        modes = data.draw(
            st.sets(st.integers(1, d), min_size=1, max_size=d)
        )
        M = tg.matricize(v, tuple(modes))
        assert np.linalg.norm(M) == pytest.approx(np.linalg.norm(v), rel=1e-13)

    @given(small_shapes, st.integers(0, 1000))
    @settings(max_examples=20, deadline=None)
    def test_single_mode_unfoldings_are_entry_permutations(self, shape, seed):
        v = random_tensor(shape, seed)
        reference = np.sort(v.ravel())
        for j in range(1, len(shape) + 1):
            entries = np.sort(tg.matricize(v, (j,)).ravel())
            assert np.array_equal(entries, reference)


class TestApplyModeOperator:
    def test_identity(self, rng):
        v = rng.standard_normal((2, 3, 4))
        out = tg.apply_mode_operator(np.eye(3), (2,), [(1,), (2,), (3,)], v)
        assert np.array_equal(out, v)

    def test_zero(self, rng):
        v = rng.standard_normal((2, 3))
        out = tg.apply_mode_operator(np.zeros((3, 3)), (2,), [(1,), (2,)], v)
        assert np.array_equal(out, np.zeros((2, 3)))

    def test_swap_matches_index_permutation(self, rng):
        v = rng.standard_normal((2, 2))
        A = np.array([[0.0, 1.0], [1.0, 0.0]])
        out = tg.apply_mode_operator(A, (1,), [(1,), (2,)], v)
        assert np.array_equal(out, v[::-1, :])

    def test_matches_index_loop_oracle(self, rng):
        v = rng.standard_normal((2, 3, 2))
        A = rng.standard_normal((3, 3))
        out = tg.apply_mode_operator(A, (2,), [(1,), (2,), (3,)], v)
        np.testing.assert_allclose(
            out, apply_single_mode_oracle(A, 2, v), atol=1e-13
        )

    def test_block_operator_on_middle_block(self, rng):
        v = rng.standard_normal((2, 2, 3, 2))
        A = rng.standard_normal((6, 6))
        out = tg.apply_mode_operator(A, (2, 3), [(1,), (2, 3), (4,)], v)
        # reference through explicit matricization round trip
        M = tg.matricize(v, (2, 3))
        ref = (A @ M).reshape(2, 3, 2, 2).transpose(2, 0, 1, 3)
        np.testing.assert_allclose(out, ref, atol=1e-13)

    def test_disjoint_blocks_commute(self, rng):
        v = rng.standard_normal((2, 3, 4))
        A = rng.standard_normal((2, 2))
        B = rng.standard_normal((4, 4))
        part = [(1,), (2,), (3,)]
        ab = tg.apply_mode_operator(
            B, (3,), part, tg.apply_mode_operator(A, (1,), part, v)
        )
        ba = tg.apply_mode_operator(
            A, (1,), part, tg.apply_mode_operator(B, (3,), part, v)
        )
        assert np.linalg.norm(ab - ba) <= 1e-13 * max(np.linalg.norm(ab), 1)

    def test_rectangular_operator_fuses_the_block(self, rng):
        v = rng.standard_normal((2, 3, 4))
        A = rng.standard_normal((5, 12))
        out = tg.apply_mode_operator(A, (2, 3), [(1,), (2, 3)], v)
        assert out.shape == (2, 5)

    def test_dimension_mismatch(self, rng):
        v = rng.standard_normal((2, 3))
        with pytest.raises(InvalidArgumentError):
            tg.apply_mode_operator(np.eye(4), (2,), [(1,), (2,)], v)

    def test_partition_must_contain_block(self, rng):
        v = rng.standard_normal((2, 3))
        with pytest.raises(InvalidArgumentError):
            tg.apply_mode_operator(np.eye(3), (2,), [(1, 2)], v)


class TestTensorProduct:
    def test_single_factor(self, rng):
        x = rng.standard_normal(5)
        assert np.array_equal(tg.tensor_product([x]), x)

    def test_hand_computed_two_by_two(self):
        out = tg.tensor_product([np.array([1.0, 0.0]), np.array([0.0, 2.0])])
        assert np.array_equal(out, np.array([[0.0, 2.0], [0.0, 0.0]]))

    def test_empty_rejected(self):
        with pytest.raises(InvalidArgumentError):
            tg.tensor_product([])

    @given(st.integers(0, 500))
    @settings(max_examples=25, deadline=None)
    def test_norm_is_product_of_norms(self, seed):
        rng = np.random.default_rng(seed)
        factors = [rng.standard_normal(n) for n in (2, 3, 4)]
        v = tg.tensor_product(factors)
        expected = np.prod([np.linalg.norm(f) for f in factors])
        assert np.linalg.norm(v) == pytest.approx(expected, rel=1e-12)


class TestSvd:
    def test_identity_singular_values(self):
        _, s, _ = tg.svd(np.eye(3))
        np.testing.assert_allclose(s, np.ones(3))

    def test_rank_one(self, rng):
        M = np.outer(rng.standard_normal(4), rng.standard_normal(6))
        _, s, _ = tg.svd(M)
        assert np.sum(s > 1e-12 * s[0]) == 1

    def test_reconstruction(self, rng):
        M = rng.standard_normal((4, 6))
        U, s, Vt = tg.svd(M)
        np.testing.assert_allclose(
            U @ np.diag(s) @ Vt, M, atol=1e-12 * np.linalg.norm(M)
        )
        np.testing.assert_allclose(U.T @ U, np.eye(4), atol=1e-12)
        np.testing.assert_allclose(Vt @ Vt.T, np.eye(4), atol=1e-12)

    def test_sign_convention_deterministic(self, rng):
        M = rng.standard_normal((5, 3))
        U1, _, _ = tg.svd(M)
        U2, _, _ = tg.svd(M.copy())
        assert np.array_equal(U1, U2)
        for j in range(U1.shape[1]):
            i = np.argmax(np.abs(U1[:, j]))
            assert U1[i, j] >= 0

    def test_sign_convention_preserves_product(self, rng):
        M = rng.standard_normal((4, 4))
        U, s, Vt = tg.svd(M)
        np.testing.assert_allclose(U @ np.diag(s) @ Vt, M, atol=1e-12)

    def test_integer_matrices_match_exact_rank(self, rng):
        for _ in range(20):
            A = rng.integers(-3, 4, size=(4, 5)).astype(float)
            s = np.linalg.svd(A, compute_uv=False)
            svd_r = tg.svd_rank(s, shape=A.shape)
            assert svd_r == gauss_rank_exact(A)

    def test_nonfinite_rejected(self):
        with pytest.raises(InvalidArgumentError):
            tg.svd(np.array([[np.inf, 0.0], [0.0, 1.0]]))


class TestMatrixExp:
    def test_zero_is_identity(self):
        np.testing.assert_allclose(tg.matrix_exp(np.zeros((3, 3))), np.eye(3))

    def test_nilpotent_truncates_exactly(self):
        A = np.array([[0.0, 1.0], [0.0, 0.0]])
        assert A @ A == pytest.approx(np.zeros((2, 2)))
        np.testing.assert_allclose(tg.matrix_exp(A), np.eye(2) + A, atol=1e-14)

    def test_diagonal_matches_scalar_exponential(self):
        E = tg.matrix_exp(np.diag([1.0, 2.0]))
        np.testing.assert_allclose(
            E, np.diag([np.e, np.e ** 2]), rtol=1e-12
        )

    def test_matches_scipy_on_random_matrices(self, rng):
        for _ in range(20):
            A = rng.standard_normal((5, 5))
            E1 = tg.matrix_exp(A)
            E2 = scipy.linalg.expm(A)
            assert np.linalg.norm(E1 - E2) <= 1e-11 * np.linalg.norm(E2)

    def test_norm_ten_regime(self, rng):
        A = rng.standard_normal((6, 6))
        A *= 10.0 / np.linalg.norm(A)
        E2 = scipy.linalg.expm(A)
        assert np.linalg.norm(tg.matrix_exp(A) - E2) <= 1e-11 * np.linalg.norm(E2)

    def test_nonsquare_rejected(self):
        with pytest.raises(InvalidArgumentError):
            tg.matrix_exp(np.ones((2, 3)))


class TestEmbedBlockOperator:
    def test_matches_apply_mode_operator_on_columns(self, rng):
        shape = (2, 3, 2)
        v = rng.standard_normal(shape)
        A = rng.standard_normal((4, 4))
        Op = tg.embed_block_operator(A, (1, 3), shape)
        direct = tg.apply_mode_operator(A, (1, 3), [(1, 3), (2,)], v)
        np.testing.assert_allclose(
            (Op @ v.ravel()).reshape(shape), direct, atol=1e-12
        )

    def test_identity_embeds_to_identity(self):
        Op = tg.embed_block_operator(np.eye(6), (2, 3), (2, 2, 3))
        np.testing.assert_allclose(Op, np.eye(12))


class TestTensorIO:
    def test_json_roundtrip(self, tmp_path, rng):
        v = rng.standard_normal((2, 3, 4))
        p = tmp_path / "t.json"
        tg.save_tensor(p, v)
        assert np.array_equal(tg.load_tensor(p), v)

    def test_binary_roundtrip(self, tmp_path, rng):
        v = rng.standard_normal((3, 2, 2))
        p = tmp_path / "t.bin"
        tg.save_tensor(p, v)
        assert np.array_equal(tg.load_tensor(p), v)

    def test_json_shape_mismatch(self, tmp_path):
        p = tmp_path / "bad.json"
        p.write_text(json.dumps({"shape": [2, 2], "data": [1.0, 2.0, 3.0]}))
        with pytest.raises(ParseError):
            tg.load_tensor(p)

    def test_binary_truncated(self, tmp_path, rng):
        v = rng.standard_normal((2, 2))
        p = tmp_path / "t.bin"
        tg.save_tensor(p, v)
        p.write_bytes(p.read_bytes()[:-8])
        with pytest.raises(ParseError):
            tg.load_tensor(p)

    def test_deterministic_bytes(self, tmp_path, rng):
        v = rng.standard_normal((2, 2, 2))
        p1, p2 = tmp_path / "a.json", tmp_path / "b.json"
        tg.save_tensor(p1, v)
        tg.save_tensor(p2, v)
        assert p1.read_bytes() == p2.read_bytes()


def test_normalize_modes_sorts_and_dedups():
    assert normalize_modes([3, 1, 3], 4) == (1, 3)
    assert complement_modes((1, 3), 4) == (2, 4)


def test_check_tensor_rejects_zero_when_asked():
    with pytest.raises(tg.DegenerateInputError):
        check_tensor(np.zeros((2, 2)), allow_zero=False)
