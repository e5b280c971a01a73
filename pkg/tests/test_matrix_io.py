#!/usr/bin/env python

"""Matrix Market parsing, generated problems and reference solutions."""

import io

import numpy as np
import pytest

from bcgbounds.errors import (
    BadHeader,
    MissingMatrixFile,
    NonSquare,
    NotSymmetric,
    PatternOrComplexUnsupported,
    TooLarge,
)
from bcgbounds.linalg import jacobi_eigen
from bcgbounds.matrix_io import (
    ProblemInstance,
    dense_reference_solve,
    parse_matrix_market,
    poisson2d,
    poisson2d_eigenvalues,
    random_rhs,
    read_matrix_market,
    write_matrix_market,
)


SYMMETRIC = """%%MatrixMarket matrix coordinate real symmetric
% a comment
3 3 4
1 1 2
2 1 -1
2 2 2
3 3 2
"""
GENERAL = "%%MatrixMarket matrix coordinate real general\n"


class TestParse:
    def test_symmetric_expanded(self):
        A = parse_matrix_market(SYMMETRIC)
        np.testing.assert_array_equal(
            A.toarray(), [[2.0, -1.0, 0.0], [-1.0, 2.0, 0.0], [0.0, 0.0, 2.0]]
        )

    def test_bytes_stream(self):
        A = parse_matrix_market(io.BytesIO(SYMMETRIC.encode()))
        assert A.n == 3 and A.nnz == 5

    def test_general_symmetric_accepted(self):
        text = GENERAL + "2 2 4\n1 1 2\n1 2 1\n2 1 1\n2 2 2\n"
        A = parse_matrix_market(text)
        np.testing.assert_array_equal(A.toarray(), [[2, 1], [1, 2]])

    def test_general_not_symmetric(self):
        text = GENERAL + "2 2 4\n1 1 2\n1 2 1\n2 1 3\n2 2 2\n"
        with pytest.raises(NotSymmetric):
            parse_matrix_market(text)

    @pytest.mark.parametrize("field", ["pattern", "complex"])
    def test_unsupported_field(self, field):
        with pytest.raises(PatternOrComplexUnsupported):
            parse_matrix_market(
                f"%%MatrixMarket matrix coordinate {field} symmetric\n1 1 1\n1 1\n"
            )

    def test_missing_banner(self):
        with pytest.raises(BadHeader):
            parse_matrix_market("3 3 1\n1 1 1\n")

    def test_array_format(self):
        with pytest.raises(BadHeader):
            parse_matrix_market("%%MatrixMarket matrix array real general\n1 1\n1\n")

    def test_non_square(self):
        with pytest.raises(NonSquare):
            parse_matrix_market(GENERAL + "2 3 1\n1 1 1\n")

    def test_short_body(self):
        with pytest.raises(BadHeader):
            parse_matrix_market(SYMMETRIC.splitlines()[0] + "\n2 2 3\n1 1 1\n")

    def test_write_then_parse(self):
        A = poisson2d(3)
        text = write_matrix_market(A)
        assert text.startswith("%%MatrixMarket matrix coordinate real symmetric\n")
        np.testing.assert_array_equal(parse_matrix_market(text).toarray(), A.toarray())

    def test_read_file(self, tmp_path):
        path = tmp_path.joinpath("a.mtx")
        path.write_text(SYMMETRIC)
        assert read_matrix_market(path).n == 3
        with pytest.raises(MissingMatrixFile) as exc:
            read_matrix_market(tmp_path.joinpath("missing.mtx"))
        assert isinstance(exc.value, FileNotFoundError)


class TestPoisson:
    def test_one_by_one(self):
        np.testing.assert_array_equal(poisson2d(1).toarray(), [[4.0]])

    def test_structure(self):
        A = poisson2d(3)
        assert A.n == 9
        assert A.nnz == 9 + 2 * 12

    def test_eigenvalues(self):
        np.testing.assert_allclose(
            poisson2d_eigenvalues(4), np.linalg.eigvalsh(poisson2d(4).toarray()), atol=1e-12
        )

    @pytest.mark.parametrize("k", [1, 2, 5, 9, 12])
    def test_eigenvalues_jacobi(self, k):
        w, _ = jacobi_eigen(poisson2d(k).toarray())
        np.testing.assert_allclose(w, poisson2d_eigenvalues(k), rtol=0, atol=1e-9)

    def test_invalid_mesh(self):
        with pytest.raises(ValueError):
            poisson2d(0)


class TestRandomRhs:
    def test_deterministic(self):
        np.testing.assert_array_equal(random_rhs(20, 3, 7), random_rhs(20, 3, 7))
        assert not np.array_equal(random_rhs(20, 3, 7), random_rhs(20, 3, 8))

    def test_range_and_shape(self):
        B = random_rhs(50, 4, 1)
        assert B.shape == (50, 4)
        assert np.all(np.abs(B) <= 1.0)

    def test_block_wider_than_matrix(self):
        with pytest.raises(ValueError):
            random_rhs(2, 3, 1)


class TestReference:
    def test_solves(self):
        A = poisson2d(4)
        B = random_rhs(16, 2, 1)
        X = dense_reference_solve(A, B)
        np.testing.assert_allclose(A.toarray() @ X, B, atol=1e-12)

    def test_too_large(self):
        A = poisson2d(71)
        with pytest.raises(TooLarge):
            dense_reference_solve(A, np.ones((A.n, 1)))

    def test_problem_rejects_wrong_solution(self):
        A = poisson2d(2)
        B = np.ones((4, 1))
        with pytest.raises(ValueError):
            ProblemInstance(A=A, B=B, X_true=np.zeros((4, 1)))
        problem = ProblemInstance(A=A, B=B.ravel(), X_true=dense_reference_solve(A, B))
        assert (problem.n, problem.m) == (4, 1)
