import cvxpy as cp
import numpy as np
import pytest
import scipy.sparse as sp

from irs_isac import conic
from irs_isac.conic import ConeProgram, ExtractionError

from conftest import random_complex


def trace_program():
    """minimize tr X s.t. X - I in the 2x2 PSD cone; x = svec(X)."""
    # s = svec(X - I) = x - svec(I), so A = -I and b = -svec(I)
    return ConeProgram(c=[1.0, 0.0, 1.0], A=-sp.eye(3), b=-np.array([1.0, 0.0, 1.0]),
                       cones=[("psd", 2)])


def soc_program():
    """minimize t s.t. (t, 3, 4) in the SOC."""
    A = sp.csc_matrix(np.array([[-1.0], [0.0], [0.0]]))
    return ConeProgram(c=[1.0], A=A, b=[0.0, 3.0, 4.0], cones=[("soc", 3)])


def linear_program():
    """minimize x s.t. x - 1 >= 0."""
    return ConeProgram(c=[1.0], A=sp.csc_matrix([[-1.0]]), b=[-1.0], cones=[("nonneg", 1)])


class TestClosedForm:
    def test_trace(self):
        prog = trace_program()
        sol = conic.solve(prog)
        assert sol.status == conic.OPTIMAL
        assert sol.objective == pytest.approx(2.0, abs=1e-7)
        np.testing.assert_allclose(conic.svec_to_mat(sol.x, 2), np.eye(2), atol=1e-7)

    def test_soc(self):
        sol = conic.solve(soc_program())
        assert sol.status == conic.OPTIMAL
        assert sol.x[0] == pytest.approx(5.0, abs=1e-7)

    def test_linear(self):
        sol = conic.solve(linear_program())
        assert sol.status == conic.OPTIMAL
        assert sol.objective == pytest.approx(1.0, abs=1e-7)

    @pytest.mark.parametrize("build", [trace_program, soc_program, linear_program])
    def test_certificate(self, build):
        prog = build()
        sol = conic.solve(prog)
        assert max(sol.primal_residual, sol.dual_residual, sol.gap) <= conic.DEFAULT_TOL
        assert conic.check_cones(prog, sol.s) <= 1e-7
        # weak duality
        assert prog.c @ sol.x >= -prog.b @ sol.z - 1e-7

    @pytest.mark.parametrize("build", [trace_program, soc_program, linear_program])
    def test_resolve_bit_exact(self, build):
        prog = build()
        a, b = conic.solve(prog), conic.solve(prog)
        assert a.x.tobytes() == b.x.tobytes()
        assert a.z.tobytes() == b.z.tobytes()
        assert a.objective == b.objective


class TestStatus:
    def test_infeasible(self):
        # x >= 1 and -x >= 0
        prog = ConeProgram(c=[1.0], A=sp.csc_matrix([[-1.0], [1.0]]), b=[-1.0, 0.0],
                           cones=[("nonneg", 2)])
        assert conic.solve(prog).status == conic.INFEASIBLE

    def test_unbounded(self):
        prog = ConeProgram(c=[-1.0], A=sp.csc_matrix([[-1.0]]), b=[0.0], cones=[("nonneg", 1)])
        assert conic.solve(prog).status == conic.UNBOUNDED

    def test_iteration_cap(self):
        prog = trace_program()
        sol = conic.solve(prog, max_iter=1)
        assert sol.status == conic.MAX_ITER


class TestProgram:
    def test_partition_checked(self):
        with pytest.raises(ValueError):
            ConeProgram(c=[1.0], A=sp.csc_matrix([[1.0], [1.0]]), b=[0.0, 0.0],
                        cones=[("nonneg", 1)])

    def test_unknown_cone(self):
        with pytest.raises(ValueError):
            ConeProgram(c=[1.0], A=sp.csc_matrix([[1.0]]), b=[0.0], cones=[("exp", 1)])

    def test_dump_round_trip(self, tmp_path):
        prog = soc_program()
        prog.dump(tmp_path / "p.txt")
        back = ConeProgram.loads((tmp_path / "p.txt").read_text())
        assert back.cones == prog.cones
        np.testing.assert_array_equal(back.A.toarray(), prog.A.toarray())
        np.testing.assert_array_equal(back.b, prog.b)
        assert conic.solve(back).x[0] == pytest.approx(5.0, abs=1e-7)


class TestModeling:
    def test_solve_problem_writes_back(self):
        x = cp.Variable(2)
        prob = cp.Problem(cp.Minimize(cp.sum(x)), [x >= np.array([1.0, -2.0])])
        sol = conic.solve_problem(prob)
        assert sol.ok
        np.testing.assert_allclose(x.value, [1.0, -2.0], atol=1e-7)
        assert prob.value == pytest.approx(-1.0, abs=1e-7)

    def test_hermitian_psd_variable(self, rng):
        # nearest Hermitian PSD matrix to an indefinite Hermitian target
        M = random_complex(rng, 3, 3)
        M = (M + M.conj().T) / 2
        _, H = conic.hermitian_psd(3)
        prob = cp.Problem(cp.Minimize(cp.norm(H - M, "fro")))
        assert conic.solve_problem(prob).ok
        eig, vec = np.linalg.eigh(M)
        proj = (vec * np.maximum(eig, 0)) @ vec.conj().T
        assert prob.value == pytest.approx(np.linalg.norm(proj - M), abs=1e-7)
        # the argmin of a nonsmooth objective is only determined to about sqrt(tol)
        np.testing.assert_allclose(H.value, proj, atol=1e-3)

    @pytest.mark.parametrize("embed", [False, True])
    def test_hermitian_lmi_forms(self, rng, embed):
        # largest t with M - t I PSD equals the smallest eigenvalue
        M = random_complex(rng, 4, 4)
        M = (M + M.conj().T) / 2
        t = cp.Variable()
        prob = cp.Problem(cp.Maximize(t), conic.hermitian_lmi(M - t * np.eye(4), embed=embed))
        assert conic.solve_problem(prob).ok
        assert t.value == pytest.approx(np.linalg.eigvalsh(M)[0], abs=1e-6)

    def test_complexify_of_lifting(self, rng):
        H = random_complex(rng, 3, 3)
        H = H @ H.conj().T
        Y = np.block([[H.real, -H.imag], [H.imag, H.real]])
        np.testing.assert_allclose(conic.complexify(Y), H, atol=1e-14)


class TestExtraction:
    def test_diagonal(self):
        w, q = conic.extract_rank_one(np.diag([4.0, 0.0]))
        np.testing.assert_allclose(np.abs(w), [2.0, 0.0], atol=1e-12)
        assert q == 0.0

    def test_exact_rank_one(self, rng):
        w0 = random_complex(rng, 6)
        W = np.outer(w0, w0.conj())
        w, q = conic.extract_rank_one(W)
        assert np.linalg.norm(np.outer(w, w.conj()) - W) <= 1e-8 * np.linalg.norm(W)
        assert q < 1e-12

    def test_identity(self):
        w, q = conic.extract_rank_one(np.eye(2))
        assert np.linalg.norm(w) == pytest.approx(1.0)
        assert q == pytest.approx(1.0)

    def test_zero(self):
        w, q = conic.extract_rank_one(np.zeros((3, 3)))
        np.testing.assert_array_equal(w, 0.0)
        assert q == 0.0

    def test_not_psd(self):
        with pytest.raises(ExtractionError):
            conic.extract_rank_one(np.diag([1.0, -0.5]))


def test_is_psd_and_soc_helpers():
    assert conic.is_psd(np.eye(3))
    assert not conic.is_psd(np.diag([1.0, -1e-3]))
    assert conic.soc_violation(5.0, [3.0, 4.0]) == 0.0
    assert conic.soc_violation(4.0, [3.0, 4.0]) == pytest.approx(1.0)


def test_svec_inverse():
    X = np.array([[1.0, 2.0, 3.0], [2.0, 5.0, 6.0], [3.0, 6.0, 9.0]])
    r2 = np.sqrt(2.0)
    # column-major upper triangle: X00, X01, X11, X02, X12, X22
    vec = [1.0, 2.0 * r2, 5.0, 3.0 * r2, 6.0 * r2, 9.0]
    np.testing.assert_allclose(conic.svec_to_mat(vec, 3), X)
