import math

import numpy as np
import pytest

from starsec.conic import (
    AffineExpr,
    ConicError,
    ConicProgram,
    SolveSettings,
    check_solution,
    cinner,
    cmatvec,
    dumps_program,
    embed_hermitian,
    extract_hermitian,
    herm_params_from_matrix,
    herm_quad,
    herm_trace,
    herm_trace_prod,
    loads_program,
    solve,
    solve_canonical,
    two_re,
)


def random_hermitian(rng, n, psd=False):
    a = rng.standard_normal((n, n)) + 1j * rng.standard_normal((n, n))
    if psd:
        return a @ a.conj().T
    return (a + a.conj().T) / 2.0


class TestEmbedding:
    def test_scalar(self):
        assert np.array_equal(embed_hermitian(np.array([[2.0]])), [[2.0, 0.0], [0.0, 2.0]])

    def test_antisymmetric_imaginary(self):
        m = np.array([[0.0, 1j], [-1j, 0.0]])
        eigs = np.sort(np.linalg.eigvalsh(embed_hermitian(m)))
        assert np.allclose(eigs, [-1.0, -1.0, 1.0, 1.0])

    def test_psd_equivalence(self):
        rng = np.random.default_rng(0)
        for _ in range(100):
            n = int(rng.integers(1, 6))
            m = random_hermitian(rng, n, psd=bool(rng.integers(2)))
            lhs = np.min(np.linalg.eigvalsh(m)) >= -1e-10
            rhs = np.min(np.linalg.eigvalsh(embed_hermitian(m))) >= -1e-10
            assert lhs == rhs

    def test_trace_doubles(self):
        rng = np.random.default_rng(1)
        m = random_hermitian(rng, 4)
        assert np.trace(embed_hermitian(m)) == pytest.approx(2 * np.trace(m).real)

    def test_non_hermitian_rejected(self):
        with pytest.raises(ConicError):
            embed_hermitian(np.array([[0.0, 1.0], [0.0, 0.0]]))

    def test_round_trip(self):
        rng = np.random.default_rng(2)
        m = random_hermitian(rng, 5)
        back = extract_hermitian(embed_hermitian(m))
        assert np.max(np.abs(back - m)) < 1e-9
        assert np.max(np.abs(back - back.conj().T)) < 1e-15


class TestExpressions:
    def test_affine_algebra(self):
        prog = ConicProgram()
        x = prog.add_real("x", 3)
        expr = 2.0 * prog.expr(x) - 1.0
        val = expr.value({"x": np.array([1.0, 2.0, 3.0])})
        assert np.allclose(val, [1.0, 3.0, 5.0])

    def test_concat_and_rows(self):
        prog = ConicProgram()
        x = prog.add_real("x", 2)
        e = AffineExpr.concat([prog.expr(x), AffineExpr.constant([7.0])])
        assert e.dim == 3
        assert np.allclose(e.rows([2]).value({"x": np.zeros(2)}), [7.0])

    def test_complex_matvec(self):
        rng = np.random.default_rng(3)
        prog = ConicProgram()
        z = prog.add_complex("z", 3)
        m = rng.standard_normal((2, 3)) + 1j * rng.standard_normal((2, 3))
        zval = rng.standard_normal(3) + 1j * rng.standard_normal(3)
        assign = {"z": np.concatenate([zval.real, zval.imag])}
        expr = cmatvec(m, prog.cexpr(z))
        got = expr.re.value(assign) + 1j * expr.im.value(assign)
        assert np.allclose(got, m @ zval)

    def test_cinner_and_two_re(self):
        rng = np.random.default_rng(4)
        prog = ConicProgram()
        w = prog.add_complex("w", 4)
        g = rng.standard_normal(4) + 1j * rng.standard_normal(4)
        b = complex(rng.standard_normal() + 1j * rng.standard_normal())
        wval = rng.standard_normal(4) + 1j * rng.standard_normal(4)
        assign = {"w": np.concatenate([wval.real, wval.imag])}
        u = cinner(g, prog.cexpr(w))
        got = complex(u.re.value(assign)[0] + 1j * u.im.value(assign)[0])
        assert got == pytest.approx(g.conj() @ wval)
        assert two_re(b, u).value(assign)[0] == pytest.approx(
            2 * (b.conjugate() * (g.conj() @ wval)).real
        )

    def test_hermitian_forms(self):
        rng = np.random.default_rng(5)
        prog = ConicProgram()
        r = prog.add_hermitian("R", 4)
        mat = random_hermitian(rng, 4)
        params = herm_params_from_matrix(mat)
        assign = {"R": params}
        assert herm_trace(r).value(assign)[0] == pytest.approx(np.trace(mat).real)
        g = rng.standard_normal(4) + 1j * rng.standard_normal(4)
        assert herm_quad(r, g).value(assign)[0] == pytest.approx(
            (g.conj() @ mat @ g).real
        )
        other = random_hermitian(rng, 4)
        assert herm_trace_prod(r, other).value(assign)[0] == pytest.approx(
            np.trace(mat @ other).real
        )

    def test_unknown_variable_rejected(self):
        prog = ConicProgram()
        expr = AffineExpr(1, {"ghost": np.ones((1, 2))}, np.zeros(1))
        with pytest.raises(ConicError):
            prog.add_nonneg(expr, "bad")


class TestSolve:
    def test_bounded_lp(self):
        prog = ConicProgram()
        t = prog.add_real("t", 1)
        prog.add_nonneg(AffineExpr.constant([5.0]) - prog.expr(t), "cap")
        prog.set_objective_max(prog.expr(t))
        res = solve(prog)
        assert res.ok and res.objective == pytest.approx(5.0, abs=1e-7)

    def test_contradictory_constraints(self):
        prog = ConicProgram()
        t = prog.add_real("t", 1)
        prog.add_nonneg(prog.expr(t) - 2.0, "low")
        prog.add_nonneg(AffineExpr.constant([1.0]) - prog.expr(t), "high")
        prog.set_objective_max(prog.expr(t))
        assert solve(prog).status == "infeasible"

    def test_soc_of_quadratic_fixed_vector(self):
        # minimizing the bound of ||(3,4)||^2 <= t must land at 25
        prog = ConicProgram()
        t = prog.add_real("t", 1)
        prog.soc_of_quadratic(AffineExpr.constant([3.0, 4.0]), prog.expr(t), "q")
        prog.set_objective_max(-1.0 * prog.expr(t))
        res = solve(prog)
        assert res.ok and res.primal["t"][0] == pytest.approx(25.0, abs=1e-6)

    def test_soc_of_quadratic_zero_vector(self):
        prog = ConicProgram()
        t = prog.add_real("t", 1)
        prog.soc_of_quadratic(AffineExpr.constant([0.0]), prog.expr(t), "q")
        prog.set_objective_max(-1.0 * prog.expr(t))
        res = solve(prog)
        assert res.ok and res.primal["t"][0] == pytest.approx(0.0, abs=1e-7)

    def test_hypograph_log(self):
        prog = ConicProgram()
        lvl = prog.add_real("lvl", 1)
        prog.hypograph_log(AffineExpr.constant([8.0]), prog.expr(lvl), "log")
        prog.set_objective_max(prog.expr(lvl))
        res = solve(prog)
        assert res.ok and res.objective == pytest.approx(3.0, abs=1e-6)

    def test_hypograph_log_unit(self):
        prog = ConicProgram()
        lvl = prog.add_real("lvl", 1)
        prog.hypograph_log(AffineExpr.constant([1.0]), prog.expr(lvl), "log")
        prog.set_objective_max(prog.expr(lvl))
        res = solve(prog)
        assert res.objective == pytest.approx(0.0, abs=1e-7)

    def test_psd_smallest_diagonal(self):
        # min t with [[t, 1], [1, t]] PSD is t = 1
        prog = ConicProgram()
        r = prog.add_hermitian("R", 2)
        t = prog.expr(prog.add_real("t", 1))
        diag = herm_trace_prod(r, np.diag([1.0, 0.0]).astype(complex))
        diag2 = herm_trace_prod(r, np.diag([0.0, 1.0]).astype(complex))
        off = herm_trace_prod(r, np.array([[0, 0.5], [0.5, 0]], dtype=complex))
        prog.add_zero(diag - t, "d1")
        prog.add_zero(diag2 - t, "d2")
        prog.add_zero(off - 1.0, "off")
        prog.add_psd(r, "psd")
        prog.set_objective_max(-1.0 * t)
        res = solve(prog)
        assert res.ok and res.primal["t"][0] == pytest.approx(1.0, abs=1e-6)

    def test_determinism(self):
        def build():
            prog = ConicProgram()
            t = prog.add_real("t", 1)
            z = prog.add_complex("z", 2)
            prog.add_soc(prog.expr(t), prog.cexpr(z).stacked(), "ball")
            prog.add_nonneg(AffineExpr.constant([3.0]) - prog.expr(t), "cap")
            obj = prog.expr(t) + two_re(1.0 + 0.5j, cinner(np.array([1.0, 1j]), prog.cexpr(z)))
            prog.set_objective_max(obj)
            return prog

        a = solve(build())
        b = solve(build())
        assert a.ok and np.array_equal(a.x, b.x)


class TestAudit:
    def test_margins_at_solution(self, desk_channels, desk_config, desk_restored,
                                 desk_consts, desk_plan):
        from starsec.subproblems import build_w_step

        prog = build_w_step(
            desk_channels, desk_restored, desk_consts, desk_config, desk_plan
        )
        canon = prog.canonicalize()
        res = solve_canonical(canon)
        assert res.ok
        margins = check_solution(canon, res.x)
        assert min(margins.values()) >= -1e-7

    def test_every_tag_reported(self, desk_channels, desk_config, desk_restored,
                                desk_consts, desk_plan):
        from starsec.subproblems import build_w_step

        prog = build_w_step(
            desk_channels, desk_restored, desk_consts, desk_config, desk_plan
        )
        canon = prog.canonicalize()
        tags = {c.tag for c in prog.constraints}
        assert set(check_solution(canon, np.zeros(canon.n))) == tags


class TestDump:
    def test_round_trip_objective(self, desk_channels, desk_config, desk_restored,
                                  desk_consts, desk_plan):
        from starsec.subproblems import build_w_step

        prog = build_w_step(
            desk_channels, desk_restored, desk_consts, desk_config, desk_plan
        )
        canon = prog.canonicalize()
        text = dumps_program(canon)
        back = loads_program(text)
        a = solve_canonical(canon)
        b = solve_canonical(back)
        assert a.ok and b.ok
        assert b.objective == pytest.approx(a.objective, rel=1e-9)

    def test_backends_agree(self):
        prog = ConicProgram()
        t = prog.add_real("t", 1)
        lvl = prog.add_real("lvl", 1)
        prog.add_nonneg(AffineExpr.constant([6.0]) - prog.expr(t), "cap")
        prog.hypograph_log(prog.expr(t), prog.expr(lvl), "log")
        prog.set_objective_max(prog.expr(lvl))
        canon = prog.canonicalize()
        a = solve_canonical(canon, SolveSettings(backend="clarabel"))
        b = solve_canonical(canon, SolveSettings(backend="scs", tol=1e-9))
        assert a.ok and b.ok
        assert a.objective == pytest.approx(math.log2(6.0), abs=1e-6)
        assert b.objective == pytest.approx(a.objective, abs=1e-6)
