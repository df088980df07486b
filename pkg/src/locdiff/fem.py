"""P1 finite elements on (0,1) with the shadow-constraint subspace.

Two discrete operators share one mesh: the perturbed operator carries the
full diffusion p_eps over all of (0,1); the limit operator restricts the
bilinear form to the subspace of functions that are a single constant on
all nodes of [x1, x2] (the constraint basis B).  Energy norms of
differences are always taken with the perturbed form, which is the
natural space for every estimate here.

Element integrals use 3-point Gauss, which is exact whenever the
coefficient is linear on the element; all profile breakpoints are forced
into the node set so the built-in piecewise-linear profiles are
integrated exactly.
"""

from __future__ import annotations

import numpy as np
import scipy.sparse as sp
import scipy.sparse.linalg as spla

from .errors import (
    AssemblyError,
    ConfigError,
    ContractViolation,
    RefineRequestError,
    SingularOperatorError,
)
from .model import GRID_POINTS

# reference-element Gauss rule on [0,1], exact through degree 5
GAUSS_PTS = np.array([0.5 - 0.5 * np.sqrt(0.6), 0.5, 0.5 + 0.5 * np.sqrt(0.6)])
GAUSS_WTS = np.array([5.0 / 18.0, 8.0 / 18.0, 5.0 / 18.0])

__all__ = [
    "Mesh",
    "GridFunction",
    "DiscreteOperator",
    "build_mesh",
    "assemble",
    "build_pair",
    "constraint_basis",
    "energy_norm",
    "energy_inner",
    "l2_norm",
    "extend_E",
    "matrix_coo_text",
    "nonlinear_load",
    "weighted_mass",
    "interpolate",
]


class Mesh:
    """Sorted node set on [0,1] with the forced breakpoints resolved exactly."""

    def __init__(self, nodes, x1, x2):
        nodes = np.asarray(nodes, dtype=float)
        gaps = np.diff(nodes)
        if np.any(gaps <= 0):
            raise AssemblyError("mesh nodes must be strictly increasing")
        self.nodes = nodes
        self.h = gaps
        self.x1 = float(x1)
        self.x2 = float(x2)
        self.i1 = self._locate(x1)
        self.i2 = self._locate(x2)

    def _locate(self, x):
        i = int(np.searchsorted(self.nodes, x))
        for j in (i - 1, i, i + 1):
            if 0 <= j < len(self.nodes) and abs(self.nodes[j] - x) < 1e-12:
                return j
        raise AssemblyError(f"required breakpoint {x} is not a mesh node")

    @property
    def n_nodes(self):
        return len(self.nodes)

    @property
    def n_elements(self):
        return len(self.nodes) - 1

    def gauss_x(self):
        """Physical Gauss points, shape (n_elements, 3)."""
        return self.nodes[:-1, None] + self.h[:, None] * GAUSS_PTS[None, :]

    def omega0_slice(self):
        """Node indices carrying the lumped constant, inclusive of x1 and x2."""
        return slice(self.i1, self.i2 + 1)

    def __repr__(self):
        return f"Mesh({self.n_elements} elements, x1@{self.i1}, x2@{self.i2})"


def build_mesh(config, profile, n) -> Mesh:
    """Uniform background of n elements with profile breakpoints forced in.

    Background nodes within 0.3/n of a forced point are snapped away so no
    degenerate slivers appear; forced points closer than 1e-9 to each other
    (or out of order) mean eps is unresolvable and raise a refine request.
    """
    if n < 16:
        raise ConfigError(f"need n >= 16 background elements, got {n}")
    eps = profile.eps
    ordered = [0.0, config.x1 - eps, config.x1, config.x1 + eps,
               config.x2 - eps, config.x2, config.x2 + eps, 1.0]
    gaps = np.diff(ordered)
    if np.any(gaps < 1e-9):
        raise RefineRequestError(
            f"profile breakpoints collide for eps={eps} "
            f"(x1={config.x1}, x2={config.x2}); enlarge the partition or eps"
        )
    forced = np.array(sorted(set(ordered) | set(profile.breakpoints())))
    if np.any(np.diff(forced) < 1e-9):
        raise RefineRequestError("custom profile breakpoints collide with the layer")

    bg = np.linspace(0.0, 1.0, n + 1)
    dist = np.min(np.abs(bg[:, None] - forced[None, :]), axis=1)
    nodes = np.sort(np.concatenate([bg[dist > 0.3 / n], forced]))
    return Mesh(nodes, config.x1, config.x2)


class GridFunction:
    """Nodal values on a mesh, tagged with the space they live in.

    Constrained functions are constant on every node of [x1, x2] by exact
    coefficient equality; that is checked at construction.
    """

    __slots__ = ("mesh", "values", "space")

    def __init__(self, mesh, values, space="full"):
        values = np.asarray(values, dtype=float)
        if values.shape != (mesh.n_nodes,):
            raise ContractViolation(
                f"values shape {values.shape} does not match mesh ({mesh.n_nodes} nodes)"
            )
        if space not in ("full", "constrained"):
            raise ContractViolation(f"unknown space tag {space!r}")
        if space == "constrained":
            block = values[mesh.omega0_slice()]
            if block.size and np.any(block != block[0]):
                raise ContractViolation(
                    "constrained GridFunction must be a single constant on [x1, x2]"
                )
        self.mesh = mesh
        self.values = values
        self.space = space

    def copy(self):
        return GridFunction(self.mesh, self.values.copy(), self.space)

    def __call__(self, x):
        return np.interp(np.asarray(x, dtype=float), self.mesh.nodes, self.values)

    def to_csv_rows(self):
        return list(zip(self.mesh.nodes.tolist(), self.values.tolist()))


def interpolate(mesh, fn, space="full"):
    """Nodal interpolant of a callable (or broadcastable constant)."""
    vals = np.asarray(fn(mesh.nodes) if callable(fn) else fn, dtype=float)
    vals = np.broadcast_to(vals, (mesh.n_nodes,)).copy()
    return GridFunction(mesh, vals, space)


def constraint_basis(mesh) -> sp.csr_matrix:
    """Boolean basis of the constrained subspace.

    Column order: nodes left of x1, then the single lumped column spanning
    all of [x1, x2], then nodes right of x2.  The lumped column index is
    mesh.i1.
    """
    N = mesh.n_nodes
    merged = mesh.i2 - mesh.i1 + 1
    Nc = N - merged + 1
    rows = np.arange(N)
    cols = np.empty(N, dtype=int)
    cols[: mesh.i1] = np.arange(mesh.i1)
    cols[mesh.i1: mesh.i2 + 1] = mesh.i1
    cols[mesh.i2 + 1:] = np.arange(mesh.i1 + 1, Nc)
    data = np.ones(N)
    return sp.csr_matrix((data, (rows, cols)), shape=(N, Nc))


def _scatter(mesh, aLL, aLR, aRR):
    """Assemble a symmetric tridiagonal form from per-element 2x2 blocks."""
    ne = mesh.n_elements
    iL = np.arange(ne)
    iR = iL + 1
    rows = np.concatenate([iL, iL, iR, iR])
    cols = np.concatenate([iL, iR, iL, iR])
    data = np.concatenate([aLL, aLR, aLR, aRR])
    return sp.csr_matrix((data, (rows, cols)), shape=(mesh.n_nodes, mesh.n_nodes))


def _stiffness(mesh, p_fn):
    pq = p_fn(mesh.gauss_x())
    pbar = pq @ GAUSS_WTS  # mean of p over each element
    k = pbar / mesh.h
    return _scatter(mesh, k, -k, k)


def _weighted_mass_from_gauss(mesh, wq):
    g = GAUSS_PTS
    w = GAUSS_WTS
    aLL = mesh.h * (wq @ (w * (1 - g) ** 2))
    aLR = mesh.h * (wq @ (w * g * (1 - g)))
    aRR = mesh.h * (wq @ (w * g**2))
    return _scatter(mesh, aLL, aLR, aRR)


def weighted_mass(mesh, weight):
    """int weight(x) u v for P1 u, v; weight is a callable or Gauss-point array."""
    wq = weight(mesh.gauss_x()) if callable(weight) else np.asarray(weight)
    wq = np.broadcast_to(wq, (mesh.n_elements, 3))
    return _weighted_mass_from_gauss(mesh, wq)


def _mass(mesh):
    h = mesh.h
    return _scatter(mesh, h / 3.0, h / 6.0, h / 3.0)


def nonlinear_load(mesh, f, values):
    """Load vector of f(u) against the P1 test functions, 3-point Gauss."""
    g = GAUSS_PTS
    uq = values[:-1, None] * (1 - g)[None, :] + values[1:, None] * g[None, :]
    fq = f(uq)
    w = GAUSS_WTS
    contribL = mesh.h * (fq @ (w * (1 - g)))
    contribR = mesh.h * (fq @ (w * g))
    out = np.zeros(mesh.n_nodes)
    out[:-1] += contribL
    out[1:] += contribR
    return out


class DiscreteOperator:
    """Stiffness / reaction / mass triple for one kind of operator.

    kind 'perturbed' carries p_eps everywhere; kind 'limit' carries p0 and
    owns the constraint basis B plus the reduced matrices.  Factorizations
    are cached; ask for them through solve_full / solve_constrained.
    """

    def __init__(self, mesh, config, profile, kind):
        if kind not in ("perturbed", "limit"):
            raise ContractViolation(f"unknown operator kind {kind!r}")
        self.mesh = mesh
        self.config = config
        self.profile = profile
        self.kind = kind
        self.eps = None if kind == "limit" else profile.eps

        p_fn = profile if kind == "perturbed" else config.p0
        self.S = _stiffness(mesh, p_fn)
        self.R = weighted_mass(mesh, config.reaction)
        self.Mm = _mass(mesh)
        self.A = (self.S + self.R).tocsr()

        if kind == "limit":
            self.B = constraint_basis(mesh)
            self.A_c = (self.B.T @ self.A @ self.B).tocsr()
            self.M_c = (self.B.T @ self.Mm @ self.B).tocsr()
        else:
            self.B = None
            self.A_c = None
            self.M_c = None

        self._fact = {}
        self._check_structure()

    # -- structure ---------------------------------------------------------

    def _check_structure(self):
        for name, mat in (("S", self.S), ("R", self.R), ("Mm", self.Mm)):
            asym = abs(mat - mat.T).max()
            if asym > 1e-12 * max(1.0, abs(mat).max()):
                raise AssemblyError(f"{name} lost symmetry: {asym}")
        A, M = self.system()
        try:
            val = spla.eigsh(A, k=1, M=M, sigma=0, which="LM",
                             return_eigenvectors=False)
        except Exception as exc:  # factorization trouble means not SPD
            raise AssemblyError(f"definiteness check failed to factorize: {exc}")
        lo = float(val[0])
        if lo < self.config.m0 * (1.0 - 1e-6):
            raise AssemblyError(
                f"operator not uniformly positive: lambda_min={lo} < m0={self.config.m0}"
            )
        self.lambda_min_estimate = lo

    def system(self):
        """(A, M) in the operator's own coefficient space."""
        if self.kind == "limit":
            return self.A_c, self.M_c
        return self.A, self.Mm

    @property
    def dim(self):
        return self.A_c.shape[0] if self.kind == "limit" else self.A.shape[0]

    def embed(self, coeffs):
        """Coefficients-to-nodal map (B for limit, identity otherwise)."""
        if self.kind == "limit":
            return self.B @ coeffs
        return np.asarray(coeffs)

    def restrict_values(self, values):
        """Nodal values to coefficients; lumped dof gets the Omega_0 L2 average."""
        if self.kind != "limit":
            return np.asarray(values, dtype=float)
        m = self.mesh
        sl = m.omega0_slice()
        hs = m.h[m.i1: m.i2]
        block = values[sl]
        avg = float(np.sum(hs * (block[:-1] + block[1:]) / 2.0) / np.sum(hs))
        return np.concatenate([values[: m.i1], [avg], values[m.i2 + 1:]])

    # -- solves -------------------------------------------------------------

    def _factorized(self, key, matrix):
        if key not in self._fact:
            try:
                self._fact[key] = spla.factorized(matrix.tocsc())
            except RuntimeError as exc:
                raise SingularOperatorError(f"factorization of {key} failed: {exc}")
        return self._fact[key]

    def solve_full(self, rhs):
        return self._factorized("A", self.A)(np.asarray(rhs, dtype=float))

    def solve_constrained(self, rhs):
        if self.kind != "limit":
            raise ContractViolation("constrained solve needs a limit operator")
        return self._factorized("A_c", self.A_c)(np.asarray(rhs, dtype=float))

    def solve_system(self, rhs):
        """Solve with the operator's own (A, space): full or constrained."""
        if self.kind == "limit":
            return self.solve_constrained(rhs)
        return self.solve_full(rhs)

    def shifted_solver(self, mu):
        """Cached factorization of (mu*M + A) in the operator's own space."""
        A, M = self.system()
        return self._factorized(("shift", float(mu)), (A + mu * M).tocsc())

    # -- scales -------------------------------------------------------------

    def l_scale(self):
        """int p^{-1/2}: over (0,1) for the perturbed operator, Omega_1 for limit."""
        from scipy.integrate import simpson

        if self.kind == "perturbed":
            return self.profile.inverse_sqrt_integral()
        total = 0.0
        for a, b in ((0.0, self.mesh.x1), (self.mesh.x2, 1.0)):
            xs = np.linspace(a, b, GRID_POINTS // 2 + 1)
            total += simpson(1.0 / np.sqrt(self.config.p0(xs)), x=xs)
        return float(total)

    def __repr__(self):
        tag = f"eps={self.eps}" if self.kind == "perturbed" else "limit"
        return f"DiscreteOperator({tag}, {self.mesh.n_elements} elements)"


def assemble(mesh, config, profile, kind) -> DiscreteOperator:
    return DiscreteOperator(mesh, config, profile, kind)


def build_pair(config, profile, n):
    """Shared-mesh (perturbed, limit) operator pair for one eps."""
    mesh = build_mesh(config, profile, n)
    return (assemble(mesh, config, profile, "perturbed"),
            assemble(mesh, config, profile, "limit"))


def matrix_coo_text(mat):
    """Coordinate-format dump, one "row col value" line per stored entry,
    sorted by (row, col) so the output is deterministic."""
    coo = sp.coo_matrix(mat)
    order = np.lexsort((coo.col, coo.row))
    lines = [f"{coo.row[i]} {coo.col[i]} {coo.data[i]:.17g}" for i in order]
    return "\n".join(lines) + "\n"


def _as_values(u):
    return u.values if isinstance(u, GridFunction) else np.asarray(u, dtype=float)


def energy_inner(op, u, v):
    """Inner product of the perturbed energy space (p_eps u' v' + (lam+c) u v)."""
    uv, vv = _as_values(u), _as_values(v)
    if uv.shape != (op.mesh.n_nodes,) or vv.shape != (op.mesh.n_nodes,):
        raise ContractViolation("energy inner product needs full nodal vectors")
    return float(uv @ (op.A @ vv))


def energy_norm(op, u):
    return float(np.sqrt(max(energy_inner(op, u, u), 0.0)))


def l2_norm(op, u):
    uv = _as_values(u)
    return float(np.sqrt(max(uv @ (op.Mm @ uv), 0.0)))


def extend_E(profile, mesh, u):
    """Extension into the constrained space.

    Identity left of x1-eps and right of x2+eps, the Omega_0 average on
    [x1, x2], and the linear interpolant across the collars.  Idempotent,
    and the identity on functions already constant on [x1-eps, x2+eps]
    whose constant matches their own average.
    """
    vals = _as_values(u).copy()
    m = mesh
    eps = profile.eps
    ia = m._locate(m.x1 - eps)
    ib = m._locate(m.x2 + eps)

    hs = m.h[m.i1: m.i2]
    block = vals[m.omega0_slice()]
    ubar = float(np.sum(hs * (block[:-1] + block[1:]) / 2.0) / np.sum(hs))

    left_anchor = vals[ia]
    right_anchor = vals[ib]
    out = vals.copy()
    out[m.i1: m.i2 + 1] = ubar
    for j in range(ia + 1, m.i1):
        t = (m.nodes[j] - m.nodes[ia]) / (m.nodes[m.i1] - m.nodes[ia])
        out[j] = left_anchor + t * (ubar - left_anchor)
    for j in range(m.i2 + 1, ib):
        t = (m.nodes[j] - m.nodes[m.i2]) / (m.nodes[ib] - m.nodes[m.i2])
        out[j] = ubar + t * (right_anchor - ubar)
    return GridFunction(mesh, out, "constrained")
