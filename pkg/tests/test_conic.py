import io

import numpy as np
import pytest
import scipy.sparse as sp
from scipy.optimize import linprog

from tesh import conic
from tesh.conic import AffineConicBuilder, Cone, ConicProblem, export_sdpa, import_sdpa, solve
from tesh.conic.sdpa import dumps, loads


def coeffs(M):
    """Coefficient vector pairing with X through tr(M X)."""
    d = M.shape[0]
    iu, ju = np.triu_indices(d)
    return np.where(iu == ju, M[iu, ju], 2 * M[iu, ju])


def t_example():
    b = AffineConicBuilder(1)
    blk = b.add_psd(2)
    b.add_entry(blk, 0, 0, 0, 1.0)
    b.add_entry(blk, 1, 1, 0, 1.0)
    b.add_entry(blk, 0, 1, None, 1.0)
    return b.build(np.array([-1.0]))


def random_sdp(rng, d, m):
    """SDP with a planted strictly complementary primal-dual pair."""
    Q, _ = np.linalg.qr(rng.standard_normal((d, d)))
    r = d // 2
    X = Q[:, :r] @ np.diag(rng.uniform(0.5, 2, r)) @ Q[:, :r].T
    Z = Q[:, r:] @ np.diag(rng.uniform(0.5, 2, d - r)) @ Q[:, r:].T
    As = [(lambda G: (G + G.T) / 2)(rng.standard_normal((d, d))) for _ in range(m)]
    y = rng.standard_normal(m)
    C = Z + sum(yi * Ai for yi, Ai in zip(y, As))
    A = sp.csr_matrix(np.array([coeffs(Ai) for Ai in As]))
    b = np.array([np.sum(Ai * X) for Ai in As])
    return ConicProblem(coeffs(C), A, b, [Cone("psd", d)]), float(np.sum(C * X))


def check_solution(p, sol):
    """Verify a returned point against the problem data directly."""
    assert np.linalg.norm(p.A @ sol.x - p.b) <= 1e-8 * (1 + np.linalg.norm(p.b))
    for cone, B in zip(p.cones, p.unpack(sol.x)):
        lo = B.min() if cone.kind == "lp" else np.linalg.eigvalsh(B).min()
        assert lo >= -1e-9
    for cone, S in zip(p.cones, p.slack(sol.y)):
        lo = S.min() if cone.kind == "lp" else np.linalg.eigvalsh(S).min()
        assert lo >= -1e-8
    assert sol.dual_value <= sol.primal_value + 1e-7
    assert abs(sol.primal_value - sol.dual_value) <= 1e-7 * (1 + abs(sol.primal_value))
    assert abs(sol.primal_value - p.c @ sol.x) < 1e-12 * (1 + abs(sol.primal_value))


def test_psd_boundary_example():
    p = t_example()
    sol = solve(p)
    assert sol.status == conic.OPTIMAL
    assert abs(sol.y[0] - 1) <= 1e-8
    assert abs(-sol.dual_value - 1) <= 1e-8
    check_solution(p, sol)


def test_lp_lower_bound_example():
    # min x1  s.t.  x1 - x2 = 3, x >= 0
    p = ConicProblem([1.0, 0.0], sp.csr_matrix([[1.0, -1.0]]), [3.0], [Cone("lp", 2)])
    sol = solve(p)
    assert sol.status == conic.OPTIMAL
    assert abs(sol.primal_value - 3) <= 1e-8
    check_solution(p, sol)


def test_contradictory_equalities_infeasible():
    p = ConicProblem([0.0], sp.csr_matrix([[1.0], [1.0]]), [0.0, 1.0], [Cone("lp", 1)])
    assert solve(p).status == conic.INFEASIBLE


def test_negative_requirement_infeasible():
    p = ConicProblem([1.0], sp.csr_matrix([[1.0]]), [-1.0], [Cone("lp", 1)])
    assert solve(p).status == conic.INFEASIBLE


def test_unbounded():
    # min -x1  s.t.  x1 - x2 = 0, x >= 0
    p = ConicProblem([-1.0, 0.0], sp.csr_matrix([[1.0, -1.0]]), [0.0], [Cone("lp", 2)])
    assert solve(p).status == conic.UNBOUNDED


def test_redundant_rows_are_tolerated():
    p = ConicProblem([1.0, 2.0], sp.csr_matrix([[1.0, 1.0], [2.0, 2.0]]), [1.0, 2.0],
                     [Cone("lp", 2)])
    sol = solve(p)
    assert sol.status == conic.OPTIMAL and abs(sol.primal_value - 1) < 1e-8
    assert sol.y.shape == (2,)


@pytest.mark.parametrize("seed", range(5))
def test_random_lp_matches_linprog(seed):
    rng = np.random.default_rng(seed)
    m, n = 6, 14
    A = rng.standard_normal((m, n))
    b = A @ rng.uniform(0.5, 1.5, n)
    c = A.T @ rng.standard_normal(m) + rng.uniform(0.1, 1.0, n)
    ref = linprog(c, A_eq=A, b_eq=b, bounds=(0, None), method="highs")
    p = ConicProblem(c, sp.csr_matrix(A), b, [Cone("lp", n)])
    sol = solve(p)
    assert sol.status == conic.OPTIMAL
    assert abs(sol.primal_value - ref.fun) <= 1e-7 * (1 + abs(ref.fun))
    check_solution(p, sol)


@pytest.mark.parametrize("seed,d,m", [(0, 4, 3), (1, 6, 8), (2, 10, 20), (3, 45, 30)])
def test_random_sdp_planted_optimum(seed, d, m):
    p, opt = random_sdp(np.random.default_rng(seed), d, m)
    sol = solve(p)
    assert sol.status == conic.OPTIMAL
    assert abs(sol.primal_value - opt) <= 1e-7 * (1 + abs(opt))
    check_solution(p, sol)


@pytest.mark.parametrize("seed", range(3))
def test_largest_eigenvalue(seed):
    rng = np.random.default_rng(seed)
    d = 5
    G = rng.standard_normal((d, d))
    M = (G + G.T) / 2
    # max -t  s.t.  t I - M psd
    b = AffineConicBuilder(1)
    blk = b.add_psd(d)
    for i in range(d):
        b.add_entry(blk, i, i, 0, 1.0)
        for j in range(i, d):
            b.add_entry(blk, i, j, None, -M[i, j])
    sol = solve(b.build(np.array([-1.0])))
    assert sol.status == conic.OPTIMAL
    assert abs(sol.y[0] - np.linalg.eigvalsh(M).max()) < 1e-7


def test_mixed_blocks():
    # max y  s.t.  [[1, y], [y, 1]] psd and 0.5 - y >= 0
    b = AffineConicBuilder(1)
    blk = b.add_psd(2)
    b.add_entry(blk, 0, 0, None, 1.0)
    b.add_entry(blk, 1, 1, None, 1.0)
    b.add_entry(blk, 0, 1, 0, 1.0)
    lp = b.add_lp(1)
    b.add_affine(lp, 0, 0, {None: 0.5, 0: -1.0})
    p = b.build(np.array([1.0]))
    sol = solve(p)
    assert sol.status == conic.OPTIMAL and abs(sol.y[0] - 0.5) < 1e-8
    check_solution(p, sol)


def test_deterministic():
    p, _ = random_sdp(np.random.default_rng(9), 6, 5)
    a, b = solve(p), solve(p)
    np.testing.assert_array_equal(a.x, b.x)
    assert a.iterations == b.iterations


def test_size_guard():
    p = ConicProblem(np.zeros(Cone("psd", 1201).nvar), sp.csr_matrix((0, Cone("psd", 1201).nvar)),
                     np.zeros(0), [Cone("psd", 1201)])
    with pytest.raises(ValueError):
        solve(p)


def test_problem_validation():
    with pytest.raises(ValueError):
        ConicProblem([1.0], sp.csr_matrix([[1.0, 2.0]]), [1.0], [Cone("lp", 2)])
    with pytest.raises(ValueError):
        Cone("soc", 3)


def test_sdpa_t_example_layout():
    text = dumps(t_example())
    body = [ln for ln in text.splitlines() if not ln.startswith('"')]
    assert body[0] == "1" and body[1] == "1" and body[2] == "2"
    assert len(body[4:]) == 3


def test_sdpa_lp_block_negative_size():
    p = ConicProblem([1.0, 0.0], sp.csr_matrix([[1.0, -1.0]]), [3.0], [Cone("lp", 2)])
    body = [ln for ln in dumps(p).splitlines() if not ln.startswith('"')]
    assert body[2] == "-2"


@pytest.mark.parametrize("seed", range(3))
def test_sdpa_roundtrip_exact(seed, tmp_path):
    p, _ = random_sdp(np.random.default_rng(seed), 5, 4)
    path = tmp_path / "p.dat-s"
    export_sdpa(p, path, comment="random planted problem")
    q = import_sdpa(path)
    assert q.cones == p.cones
    np.testing.assert_array_equal(q.c, p.c)
    np.testing.assert_array_equal(q.b, p.b)
    assert abs(q.A - p.A).max() == 0


def test_sdpa_stream_roundtrip_resolves():
    p = t_example()
    buf = io.StringIO()
    export_sdpa(p, buf)
    buf.seek(0)
    q = import_sdpa(buf)
    assert abs(solve(q).dual_value - solve(p).dual_value) <= 1e-8


def test_sdpa_reads_punctuated_header():
    text = '"comment\n1 =mDIM\n1 =nBLOCK\n{2}\n{-1.0}\n0 1 1 2 -1.0\n1 1 1 1 -1.0\n1 1 2 2 -1.0\n'
    sol = solve(loads(text))
    assert sol.status == conic.OPTIMAL and abs(sol.y[0] - 1) < 1e-8
