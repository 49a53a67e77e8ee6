"""Solver-agnostic conic programs over real, complex, and Hermitian variables.

A program is a registry of decision variables backed by one flat real vector,
an affine objective, and a list of cone constraints, each carrying a
provenance tag naming the design constraint it encodes. Complex vectors are
stacked real/imaginary parts; Hermitian matrices are parameterized by their
diagonal and upper triangle, and enter PSD constraints through the standard
real embedding [[Re, -Im], [Im, Re]]. Canonical form is ``h(x) = b - A x in K``
with cone blocks ordered zero, nonnegative, second-order, semidefinite,
exponential; it can be dumped as JSON and re-solved by an independent backend
for differential testing.
"""

from __future__ import annotations

import json
import math
import time
from dataclasses import dataclass
from typing import Optional

import numpy as np
from scipy import sparse

LN2 = math.log(2.0)

FAMILIES = ("zero", "nonneg", "soc", "psd", "exp")


class ConicError(ValueError):
    """Malformed program construction."""


class SolverError(RuntimeError):
    """Backend failure that is not an ordinary status."""


# ---------------------------------------------------------------------------
# variables and affine expressions
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class Variable:
    name: str
    kind: str   # real | complex | hermitian
    dim: int    # entries (real/complex vector) or matrix side (hermitian)
    offset: int
    size: int   # real parameters backing the variable


def _herm_size(n: int) -> int:
    return n * n


def _pair_index(i: int, j: int) -> int:
    # upper-triangle pairs (i < j), column-major enumeration
    return j * (j - 1) // 2 + i


class AffineExpr:
    """Vector-valued real affine expression: sum_v coeffs[v] @ x_v + const."""

    __slots__ = ("dim", "coeffs", "const")

    def __init__(self, dim: int, coeffs: Optional[dict] = None, const=None):
        self.dim = int(dim)
        self.coeffs = {} if coeffs is None else coeffs
        self.const = np.zeros(self.dim) if const is None else np.asarray(const, dtype=float)
        if self.const.shape != (self.dim,):
            raise ConicError("constant term shape mismatch")

    @staticmethod
    def constant(values) -> "AffineExpr":
        arr = np.atleast_1d(np.asarray(values, dtype=float))
        return AffineExpr(arr.shape[0], {}, arr)

    def copy(self) -> "AffineExpr":
        return AffineExpr(
            self.dim, {k: v.copy() for k, v in self.coeffs.items()}, self.const.copy()
        )

    def _combine(self, other, sign: float) -> "AffineExpr":
        if isinstance(other, (int, float, np.floating, np.ndarray)):
            other = AffineExpr.constant(np.broadcast_to(np.asarray(other, dtype=float), (self.dim,)))
        if other.dim != self.dim:
            raise ConicError(f"dimension mismatch {self.dim} vs {other.dim}")
        out = self.copy()
        for name, block in other.coeffs.items():
            if name in out.coeffs:
                out.coeffs[name] = out.coeffs[name] + sign * block
            else:
                out.coeffs[name] = sign * block
        out.const = out.const + sign * other.const
        return out

    def __add__(self, other):
        return self._combine(other, 1.0)

    __radd__ = __add__

    def __sub__(self, other):
        return self._combine(other, -1.0)

    def __rsub__(self, other):
        return (-self)._combine(other, 1.0)

    def __neg__(self):
        return self * -1.0

    def __mul__(self, scalar):
        s = float(scalar)
        return AffineExpr(
            self.dim,
            {k: s * v for k, v in self.coeffs.items()},
            s * self.const,
        )

    __rmul__ = __mul__

    def rows(self, idx) -> "AffineExpr":
        sel = np.atleast_1d(np.arange(self.dim)[idx])
        return AffineExpr(
            sel.shape[0],
            {k: v[sel, :] for k, v in self.coeffs.items()},
            self.const[sel],
        )

    @staticmethod
    def concat(parts: list) -> "AffineExpr":
        parts = [p if isinstance(p, AffineExpr) else AffineExpr.constant(p) for p in parts]
        dim = sum(p.dim for p in parts)
        names = set()
        for p in parts:
            names.update(p.coeffs.keys())
        sizes = {}
        for p in parts:
            for k, v in p.coeffs.items():
                sizes[k] = v.shape[1]
        coeffs = {k: np.zeros((dim, sizes[k])) for k in names}
        const = np.zeros(dim)
        row = 0
        for p in parts:
            const[row : row + p.dim] = p.const
            for k, v in p.coeffs.items():
                coeffs[k][row : row + p.dim, :] = v
            row += p.dim
        return AffineExpr(dim, coeffs, const)

    def value(self, assignment: dict) -> np.ndarray:
        """Evaluate at a name -> real-parameter-vector assignment."""
        out = self.const.copy()
        for name, block in self.coeffs.items():
            out = out + block @ np.asarray(assignment[name], dtype=float)
        return out


class ComplexExpr:
    """Complex affine expression as a (real, imaginary) pair."""

    __slots__ = ("re", "im")

    def __init__(self, re: AffineExpr, im: AffineExpr):
        if re.dim != im.dim:
            raise ConicError("real/imaginary dimension mismatch")
        self.re = re
        self.im = im

    @property
    def dim(self) -> int:
        return self.re.dim

    def conj(self) -> "ComplexExpr":
        return ComplexExpr(self.re, -self.im)

    def __add__(self, other: "ComplexExpr") -> "ComplexExpr":
        return ComplexExpr(self.re + other.re, self.im + other.im)

    def __sub__(self, other: "ComplexExpr") -> "ComplexExpr":
        return ComplexExpr(self.re - other.re, self.im - other.im)

    def stacked(self) -> AffineExpr:
        """Real then imaginary parts, for norm expressions."""
        return AffineExpr.concat([self.re, self.im])


def cmatvec(matrix: np.ndarray, z: ComplexExpr) -> ComplexExpr:
    """Fixed complex matrix times a complex expression."""
    m = np.asarray(matrix, dtype=complex)
    if m.ndim != 2 or m.shape[1] != z.dim:
        raise ConicError("matrix/vector shape mismatch")
    mr, mi = m.real, m.imag
    re = AffineExpr(m.shape[0])
    im = AffineExpr(m.shape[0])
    re.const = mr @ z.re.const - mi @ z.im.const
    im.const = mr @ z.im.const + mi @ z.re.const
    names = set(z.re.coeffs) | set(z.im.coeffs)
    for k in names:
        a = z.re.coeffs.get(k)
        b = z.im.coeffs.get(k)
        size = a.shape[1] if a is not None else b.shape[1]
        a = a if a is not None else np.zeros((z.dim, size))
        b = b if b is not None else np.zeros((z.dim, size))
        re.coeffs[k] = mr @ a - mi @ b
        im.coeffs[k] = mr @ b + mi @ a
    return ComplexExpr(re, im)


def cinner(g: np.ndarray, z: ComplexExpr) -> ComplexExpr:
    """Scalar g^H z for a fixed complex vector g."""
    return cmatvec(np.asarray(g, dtype=complex).conj()[None, :], z)


def two_re(b: complex, u: ComplexExpr) -> AffineExpr:
    """Scalar 2 Re(conj(b) * u)."""
    if u.dim != 1:
        raise ConicError("two_re expects a scalar complex expression")
    return 2.0 * (b.real * u.re + b.imag * u.im)


# Hermitian parameter helpers -------------------------------------------------

def herm_matrix_from_params(params: np.ndarray, n: int) -> np.ndarray:
    """Reconstruct the Hermitian matrix from its real parameter vector."""
    npairs = n * (n - 1) // 2
    out = np.zeros((n, n), dtype=complex)
    out[np.diag_indices(n)] = params[:n]
    for j in range(1, n):
        for i in range(j):
            p = _pair_index(i, j)
            val = params[n + p] + 1j * params[n + npairs + p]
            out[i, j] = val
            out[j, i] = val.conjugate()
    return out


def herm_params_from_matrix(matrix: np.ndarray) -> np.ndarray:
    m = np.asarray(matrix, dtype=complex)
    n = m.shape[0]
    npairs = n * (n - 1) // 2
    params = np.zeros(_herm_size(n))
    params[:n] = m.diagonal().real
    for j in range(1, n):
        for i in range(j):
            p = _pair_index(i, j)
            params[n + p] = m[i, j].real
            params[n + npairs + p] = m[i, j].imag
    return params


def herm_trace(var: Variable) -> AffineExpr:
    if var.kind != "hermitian":
        raise ConicError("herm_trace needs a Hermitian variable")
    row = np.zeros((1, var.size))
    row[0, : var.dim] = 1.0
    return AffineExpr(1, {var.name: row})


def herm_trace_prod(var: Variable, matrix: np.ndarray) -> AffineExpr:
    """Real affine form tr(R M) for fixed Hermitian M."""
    if var.kind != "hermitian":
        raise ConicError("herm_trace_prod needs a Hermitian variable")
    m = np.asarray(matrix, dtype=complex)
    n = var.dim
    if m.shape != (n, n):
        raise ConicError("matrix side mismatch")
    if np.max(np.abs(m - m.conj().T)) > 1e-9 * max(1.0, float(np.max(np.abs(m)))):
        raise ConicError("matrix must be Hermitian")
    npairs = n * (n - 1) // 2
    row = np.zeros((1, var.size))
    row[0, :n] = m.diagonal().real
    for j in range(1, n):
        for i in range(j):
            p = _pair_index(i, j)
            row[0, n + p] = 2.0 * m[i, j].real
            row[0, n + npairs + p] = 2.0 * m[i, j].imag
    return AffineExpr(1, {var.name: row})


def herm_quad(var: Variable, g: np.ndarray) -> AffineExpr:
    """Real affine form g^H R g for a fixed complex vector g."""
    gv = np.asarray(g, dtype=complex)
    return herm_trace_prod(var, np.outer(gv, gv.conj()))


# numeric embedding ------------------------------------------------------------

def embed_hermitian(matrix: np.ndarray) -> np.ndarray:
    """Real symmetric embedding [[Re, -Im], [Im, Re]] of a Hermitian matrix.

    PSD-ness is preserved both ways; eigenvalues appear with doubled
    multiplicity and the trace doubles.
    """
    m = np.asarray(matrix, dtype=complex)
    if m.ndim != 2 or m.shape[0] != m.shape[1]:
        raise ConicError("square matrix required")
    scale = max(1.0, float(np.max(np.abs(m))))
    if np.max(np.abs(m - m.conj().T)) > 1e-9 * scale:
        raise ConicError("matrix is not Hermitian")
    a, b = m.real, m.imag
    return np.block([[a, -b], [b, a]])


def extract_hermitian(embedding: np.ndarray) -> np.ndarray:
    """Inverse of :func:`embed_hermitian` (block-averaged, exactly Hermitian)."""
    s = np.asarray(embedding, dtype=float)
    if s.ndim != 2 or s.shape[0] != s.shape[1] or s.shape[0] % 2 != 0:
        raise ConicError("embedding must be square with even side")
    n = s.shape[0] // 2
    a = (s[:n, :n] + s[n:, n:]) / 2.0
    b = (s[n:, :n] - s[:n, n:]) / 2.0
    h = a + 1j * b
    return (h + h.conj().T) / 2.0


def _svec_pairs_upper(d: int):
    return [(i, j) for j in range(d) for i in range(j + 1)]


def _svec_pairs_lower(d: int):
    return [(i, j) for j in range(d) for i in range(j, d)]


def svec_upper(matrix: np.ndarray) -> np.ndarray:
    """Scaled upper-triangle vectorization (off-diagonals times sqrt(2))."""
    d = matrix.shape[0]
    out = np.zeros(d * (d + 1) // 2)
    for idx, (i, j) in enumerate(_svec_pairs_upper(d)):
        out[idx] = matrix[i, j] * (math.sqrt(2.0) if i != j else 1.0)
    return out


def unsvec_upper(vec: np.ndarray, d: int) -> np.ndarray:
    out = np.zeros((d, d))
    for idx, (i, j) in enumerate(_svec_pairs_upper(d)):
        val = vec[idx] / (math.sqrt(2.0) if i != j else 1.0)
        out[i, j] = val
        out[j, i] = val
    return out


# ---------------------------------------------------------------------------
# the program
# ---------------------------------------------------------------------------

@dataclass
class ConeConstraint:
    tag: str
    family: str
    expr: AffineExpr
    psd_side: int = 0


class ConicProgram:
    """A maximize-affine conic program under construction."""

    def __init__(self, name: str = ""):
        self.name = name
        self.variables: dict[str, Variable] = {}
        self.constraints: list[ConeConstraint] = []
        self.objective: Optional[AffineExpr] = None
        self._n = 0

    # variable registry -------------------------------------------------------

    def _register(self, name: str, kind: str, dim: int, size: int) -> Variable:
        if name in self.variables:
            raise ConicError(f"variable {name!r} already registered")
        if dim < 1:
            raise ConicError("variable dimension must be >= 1")
        var = Variable(name=name, kind=kind, dim=dim, offset=self._n, size=size)
        self.variables[name] = var
        self._n += size
        return var

    def add_real(self, name: str, dim: int = 1) -> Variable:
        return self._register(name, "real", dim, dim)

    def add_complex(self, name: str, dim: int) -> Variable:
        return self._register(name, "complex", dim, 2 * dim)

    def add_hermitian(self, name: str, dim: int) -> Variable:
        return self._register(name, "hermitian", dim, _herm_size(dim))

    @property
    def n_params(self) -> int:
        return self._n

    # expression builders ------------------------------------------------------

    def expr(self, var: Variable, idx=None) -> AffineExpr:
        """Affine view of a real variable (optionally a subset of entries)."""
        if var.kind != "real":
            raise ConicError("expr() is for real variables")
        sel = np.arange(var.dim) if idx is None else np.atleast_1d(np.arange(var.dim)[idx])
        block = np.zeros((sel.shape[0], var.size))
        block[np.arange(sel.shape[0]), sel] = 1.0
        return AffineExpr(sel.shape[0], {var.name: block})

    def cexpr(self, var: Variable, idx=None) -> ComplexExpr:
        if var.kind != "complex":
            raise ConicError("cexpr() is for complex variables")
        sel = np.arange(var.dim) if idx is None else np.atleast_1d(np.arange(var.dim)[idx])
        m = sel.shape[0]
        re = np.zeros((m, var.size))
        im = np.zeros((m, var.size))
        re[np.arange(m), sel] = 1.0
        im[np.arange(m), var.dim + sel] = 1.0
        return ComplexExpr(
            AffineExpr(m, {var.name: re}), AffineExpr(m, {var.name: im})
        )

    # constraints ---------------------------------------------------------------

    def _check_vars(self, expr: AffineExpr) -> None:
        for name, block in expr.coeffs.items():
            var = self.variables.get(name)
            if var is None:
                raise ConicError(f"expression references unknown variable {name!r}")
            if block.shape[1] != var.size:
                raise ConicError(f"coefficient width mismatch for {name!r}")

    def _add(self, tag: str, family: str, expr: AffineExpr, psd_side: int = 0) -> None:
        self._check_vars(expr)
        self.constraints.append(ConeConstraint(tag=tag, family=family, expr=expr, psd_side=psd_side))

    def add_zero(self, expr: AffineExpr, tag: str) -> None:
        self._add(tag, "zero", expr)

    def add_complex_zero(self, z: ComplexExpr, tag: str) -> None:
        self._add(tag, "zero", z.stacked())

    def add_nonneg(self, expr: AffineExpr, tag: str) -> None:
        self._add(tag, "nonneg", expr)

    def add_soc(self, bound: AffineExpr, vec: AffineExpr, tag: str) -> None:
        """Norm constraint ||vec|| <= bound."""
        if bound.dim != 1:
            raise ConicError("SOC bound must be scalar")
        self._add(tag, "soc", AffineExpr.concat([bound, vec]))

    def soc_of_quadratic(self, vec: AffineExpr, bound: AffineExpr, tag: str) -> None:
        """Quadratic constraint ||vec||^2 <= bound as a second-order cone."""
        if bound.dim != 1:
            raise ConicError("quadratic bound must be scalar")
        head = 0.5 * (bound + 1.0)
        mid = 0.5 * (bound - 1.0)
        self._add(tag, "soc", AffineExpr.concat([head, mid, vec]))

    def hypograph_log(self, arg: AffineExpr, level: AffineExpr, tag: str) -> None:
        """Constraint set equivalent to ``level <= log2(arg)`` (arg > 0)."""
        if arg.dim != 1 or level.dim != 1:
            raise ConicError("hypograph_log expects scalar expressions")
        rows = AffineExpr.concat([LN2 * level, AffineExpr.constant([1.0]), arg])
        self._add(tag, "exp", rows)

    def add_psd(self, var: Variable, tag: str) -> None:
        """Hermitian variable is PSD, via its real symmetric embedding."""
        if var.kind != "hermitian":
            raise ConicError("add_psd needs a Hermitian variable")
        n = var.dim
        d = 2 * n
        npairs = n * (n - 1) // 2
        pairs = _svec_pairs_upper(d)
        block = np.zeros((len(pairs), var.size))

        def entry_selector(p: int, q: int) -> np.ndarray:
            # affine selector for embedding entry S[p, q]
            row = np.zeros(var.size)
            if p < n and q < n:
                if p == q:
                    row[p] = 1.0
                else:
                    i, j = min(p, q), max(p, q)
                    row[n + _pair_index(i, j)] = 1.0
            elif p < n <= q:
                qq = q - n
                # S[p, n+qq] = -Im R[p, qq]
                if p < qq:
                    row[n + npairs + _pair_index(p, qq)] = -1.0
                elif p > qq:
                    row[n + npairs + _pair_index(qq, p)] = 1.0
            elif p >= n and q >= n:
                pp, qq = p - n, q - n
                if pp == qq:
                    row[pp] = 1.0
                else:
                    i, j = min(pp, qq), max(pp, qq)
                    row[n + _pair_index(i, j)] = 1.0
            else:  # p >= n > q cannot occur with p <= q
                raise AssertionError("unreachable embedding index")
            return row

        r2 = math.sqrt(2.0)
        for idx, (p, q) in enumerate(pairs):
            scale = r2 if p != q else 1.0
            block[idx, :] = scale * entry_selector(p, q)
        self._add(tag, "psd", AffineExpr(len(pairs), {var.name: block}), psd_side=d)

    def set_objective_max(self, expr: AffineExpr) -> None:
        if expr.dim != 1:
            raise ConicError("objective must be scalar")
        self._check_vars(expr)
        self.objective = expr

    # canonicalization ----------------------------------------------------------

    def canonicalize(self) -> "CanonicalForm":
        if self.objective is None:
            raise ConicError("objective not set")
        order = {fam: i for i, fam in enumerate(FAMILIES)}
        ordered = sorted(
            range(len(self.constraints)),
            key=lambda i: (order[self.constraints[i].family], i),
        )
        total_rows = sum(self.constraints[i].expr.dim for i in ordered)
        n = self._n
        f_mat = np.zeros((total_rows, n))
        f_const = np.zeros(total_rows)
        rows = []
        cones: list[tuple[str, int]] = []
        cursor = 0
        pending = {"zero": 0, "nonneg": 0}

        def flush_merged(fam: str):
            if pending.get(fam, 0) > 0:
                cones.append((fam, pending[fam]))
                pending[fam] = 0

        last_family = None
        for i in ordered:
            con = self.constraints[i]
            expr = con.expr
            if last_family in ("zero", "nonneg") and con.family != last_family:
                flush_merged(last_family)
            for name, block in expr.coeffs.items():
                var = self.variables[name]
                f_mat[cursor : cursor + expr.dim, var.offset : var.offset + var.size] += block
            f_const[cursor : cursor + expr.dim] = expr.const
            rows.append(
                RowSpan(tag=con.tag, family=con.family, start=cursor, length=expr.dim,
                        psd_side=con.psd_side)
            )
            if con.family in ("zero", "nonneg"):
                pending[con.family] += expr.dim
            elif con.family == "psd":
                cones.append(("psd", con.psd_side))
            else:
                cones.append((con.family, expr.dim))
            cursor += expr.dim
            last_family = con.family
        if last_family in ("zero", "nonneg"):
            flush_merged(last_family)

        c = np.zeros(n)
        for name, block in self.objective.coeffs.items():
            var = self.variables[name]
            c[var.offset : var.offset + var.size] = block[0, :]
        d = float(self.objective.const[0])

        return CanonicalForm(
            name=self.name,
            n=n,
            a_neg=sparse.csc_matrix(f_mat),   # A = -F so that b - A x = F x + f
            b=f_const,
            c=c,
            d=d,
            cones=cones,
            rows=rows,
            variables=list(self.variables.values()),
        )


@dataclass(frozen=True)
class RowSpan:
    tag: str
    family: str
    start: int
    length: int
    psd_side: int = 0


@dataclass
class CanonicalForm:
    """Frozen cone-program data: maximize c^T x + d s.t. b - (-a_neg) x in K."""

    name: str
    n: int
    a_neg: sparse.csc_matrix   # holds F with h(x) = F x + b
    b: np.ndarray
    c: np.ndarray
    d: float
    cones: list
    rows: list
    variables: list

    def residuals(self, x: np.ndarray) -> np.ndarray:
        return self.a_neg @ x + self.b


# ---------------------------------------------------------------------------
# solving
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class SolveSettings:
    backend: str = "clarabel"
    tol: float = 1e-8
    max_iters: int = 0          # 0 -> backend default
    verbose: bool = False
    static_reg: float = 0.0     # 0 -> backend default; larger stabilizes
                                # nearly-flat KKT systems


@dataclass
class SolveResult:
    status: str                 # optimal | infeasible | unbounded | numerical-limit
    objective: float
    primal: Optional[dict]
    x: Optional[np.ndarray]
    iterations: int
    wall_time: float
    backend: str

    @property
    def ok(self) -> bool:
        return self.status == "optimal"


def _extract_primal(canon: CanonicalForm, x: np.ndarray) -> dict:
    out = {}
    for var in canon.variables:
        chunk = x[var.offset : var.offset + var.size]
        if var.kind == "real":
            out[var.name] = chunk.copy()
        elif var.kind == "complex":
            out[var.name] = chunk[: var.dim] + 1j * chunk[var.dim :]
        else:
            out[var.name] = herm_matrix_from_params(chunk, var.dim)
    return out


def _solve_clarabel(canon: CanonicalForm, settings: SolveSettings):
    import clarabel

    a = sparse.csc_matrix(-canon.a_neg)
    p = sparse.csc_matrix((canon.n, canon.n))
    q = -canon.c
    cones = []
    for fam, dim in canon.cones:
        if fam == "zero":
            cones.append(clarabel.ZeroConeT(dim))
        elif fam == "nonneg":
            cones.append(clarabel.NonnegativeConeT(dim))
        elif fam == "soc":
            cones.append(clarabel.SecondOrderConeT(dim))
        elif fam == "psd":
            cones.append(clarabel.PSDTriangleConeT(dim))
        elif fam == "exp":
            cones.append(clarabel.ExponentialConeT())
        else:
            raise SolverError(f"unknown cone family {fam!r}")
    s = clarabel.DefaultSettings()
    s.verbose = settings.verbose
    s.tol_gap_abs = settings.tol
    s.tol_gap_rel = settings.tol
    s.tol_feas = settings.tol
    if settings.max_iters > 0:
        s.max_iter = settings.max_iters
    if settings.static_reg > 0.0:
        s.static_regularization_constant = settings.static_reg
    solver = clarabel.DefaultSolver(p, q, a, canon.b, cones, s)
    sol = solver.solve()
    status_map = {
        "Solved": "optimal",
        "PrimalInfeasible": "infeasible",
        "DualInfeasible": "unbounded",
    }
    status = status_map.get(str(sol.status), "numerical-limit")
    x = np.asarray(sol.x) if sol.x is not None else None
    near = ("AlmostSolved", "InsufficientProgress", "MaxIterations")
    if str(sol.status) in near and x is not None:
        # the returned iterate is often fully usable even when the stopping
        # criterion misfires; accept it only after an audit of the raw cone
        # margins (10x the requested tolerance) and the duality gap
        gap = abs(float(sol.obj_val) - float(sol.obj_val_dual))
        scale = max(1.0, abs(float(sol.obj_val)))
        margins = check_solution(canon, x)
        if gap <= 1e-6 * scale and min(margins.values()) >= -10.0 * settings.tol:
            status = "optimal"
    return status, x, int(sol.iterations), float(sol.solve_time)


def _solve_scs(canon: CanonicalForm, settings: SolveSettings):
    import scs

    # reorder PSD rows from the canonical upper-column-major scaled triangle to
    # the backend's lower-column-major convention
    perm = np.arange(canon.b.shape[0])
    q_dims, s_dims, ep = [], [], 0
    nz = nl = 0
    row_cursor = 0
    for fam, dim in canon.cones:
        if fam == "zero":
            nz += dim
            row_cursor += dim
        elif fam == "nonneg":
            nl += dim
            row_cursor += dim
        elif fam == "soc":
            q_dims.append(dim)
            row_cursor += dim
        elif fam == "psd":
            d = dim
            m = d * (d + 1) // 2
            upper = _svec_pairs_upper(d)
            lower = _svec_pairs_lower(d)
            lower_pos = {pair: idx for idx, pair in enumerate(lower)}
            local = np.zeros(m, dtype=int)
            for u_idx, (i, j) in enumerate(upper):
                local[lower_pos[(j, i)]] = u_idx
            perm[row_cursor : row_cursor + m] = row_cursor + local
            s_dims.append(d)
            row_cursor += m
        elif fam == "exp":
            ep += 1
            row_cursor += dim
    a = sparse.csc_matrix((-canon.a_neg)[perm, :])
    b = canon.b[perm]
    cone = {}
    if nz:
        cone["z"] = nz
    if nl:
        cone["l"] = nl
    if q_dims:
        cone["q"] = q_dims
    if s_dims:
        cone["s"] = s_dims
    if ep:
        cone["ep"] = ep
    kwargs = dict(
        verbose=settings.verbose,
        eps_abs=settings.tol,
        eps_rel=settings.tol,
    )
    if settings.max_iters > 0:
        kwargs["max_iters"] = settings.max_iters
    sol = scs.solve(dict(A=a, b=b, c=-canon.c), cone, **kwargs)
    raw = sol["info"]["status"]
    if raw == "solved":
        status = "optimal"
    elif "infeasible" in raw:
        status = "infeasible"
    elif "unbounded" in raw:
        status = "unbounded"
    else:
        status = "numerical-limit"
    x = np.asarray(sol["x"]) if sol.get("x") is not None else None
    return status, x, int(sol["info"]["iter"]), float(sol["info"]["solve_time"]) / 1e3


_BACKENDS = {"clarabel": _solve_clarabel, "scs": _solve_scs}


def solve_canonical(canon: CanonicalForm, settings: Optional[SolveSettings] = None) -> SolveResult:
    settings = settings or SolveSettings()
    backend = _BACKENDS.get(settings.backend)
    if backend is None:
        raise SolverError(f"unknown backend {settings.backend!r}")
    t0 = time.perf_counter()
    status, x, iters, _ = backend(canon, settings)
    wall = time.perf_counter() - t0
    objective = float("nan")
    primal = None
    if status == "optimal" and x is not None:
        objective = float(canon.c @ x + canon.d)
        primal = _extract_primal(canon, x)
    return SolveResult(
        status=status,
        objective=objective,
        primal=primal,
        x=x,
        iterations=iters,
        wall_time=wall,
        backend=settings.backend,
    )


def solve(program: ConicProgram, settings: Optional[SolveSettings] = None) -> SolveResult:
    """Canonicalize and solve; statuses are propagated, never silently wrong."""
    return solve_canonical(program.canonicalize(), settings)


# ---------------------------------------------------------------------------
# solution audit
# ---------------------------------------------------------------------------

def _cone_margin(family: str, h: np.ndarray, psd_side: int) -> float:
    if family == "zero":
        return -float(np.max(np.abs(h))) if h.size else 0.0
    if family == "nonneg":
        return float(np.min(h))
    if family == "soc":
        return float(h[0] - np.linalg.norm(h[1:]))
    if family == "psd":
        mat = unsvec_upper(h, psd_side)
        return float(np.min(np.linalg.eigvalsh(mat)))
    if family == "exp":
        x, y, z = h
        if y > 1e-12 and z > 0.0:
            return float(min(y, z, y * math.log(z / y) - x))
        return float(min(y, z, -x))
    raise ConicError(f"unknown family {family!r}")


def check_solution(canon: CanonicalForm, x: np.ndarray) -> dict:
    """Per-tag worst cone margin at a primal point (>= 0 means satisfied)."""
    h = canon.residuals(np.asarray(x, dtype=float))
    margins: dict[str, float] = {}
    for span in canon.rows:
        m = _cone_margin(span.family, h[span.start : span.start + span.length], span.psd_side)
        margins[span.tag] = min(margins.get(span.tag, math.inf), m)
    return margins


# ---------------------------------------------------------------------------
# textual dump (differential testing)
# ---------------------------------------------------------------------------

_DUMP_VERSION = "starsec-conic-1"


def dumps_program(canon: CanonicalForm) -> str:
    coo = sparse.coo_matrix(canon.a_neg)
    payload = {
        "format_version": _DUMP_VERSION,
        "name": canon.name,
        "n": canon.n,
        "sense": "max",
        "objective": {"c": canon.c.tolist(), "d": canon.d},
        "b": canon.b.tolist(),
        "F": {
            "rows": coo.row.tolist(),
            "cols": coo.col.tolist(),
            "vals": coo.data.tolist(),
            "shape": list(coo.shape),
        },
        "cones": [[fam, dim] for fam, dim in canon.cones],
        "spans": [
            {"tag": r.tag, "family": r.family, "start": r.start,
             "length": r.length, "psd_side": r.psd_side}
            for r in canon.rows
        ],
        "variables": [
            {"name": v.name, "kind": v.kind, "dim": v.dim,
             "offset": v.offset, "size": v.size}
            for v in canon.variables
        ],
    }
    return json.dumps(payload)


def dump_program(canon: CanonicalForm, path) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        fh.write(dumps_program(canon))


def loads_program(text: str) -> CanonicalForm:
    data = json.loads(text)
    if data.get("format_version") != _DUMP_VERSION:
        raise ConicError(f"unsupported dump version {data.get('format_version')!r}")
    f = data["F"]
    a_neg = sparse.coo_matrix(
        (f["vals"], (f["rows"], f["cols"])), shape=tuple(f["shape"])
    ).tocsc()
    return CanonicalForm(
        name=data.get("name", ""),
        n=int(data["n"]),
        a_neg=a_neg,
        b=np.asarray(data["b"], dtype=float),
        c=np.asarray(data["objective"]["c"], dtype=float),
        d=float(data["objective"]["d"]),
        cones=[(fam, int(dim)) for fam, dim in data["cones"]],
        rows=[
            RowSpan(tag=s["tag"], family=s["family"], start=int(s["start"]),
                    length=int(s["length"]), psd_side=int(s.get("psd_side", 0)))
            for s in data["spans"]
        ],
        variables=[
            Variable(name=v["name"], kind=v["kind"], dim=int(v["dim"]),
                     offset=int(v["offset"]), size=int(v["size"]))
            for v in data["variables"]
        ],
    )


def load_program(path) -> CanonicalForm:
    with open(path, "r", encoding="utf-8") as fh:
        return loads_program(fh.read())
