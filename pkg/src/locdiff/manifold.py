"""Slow-manifold graphs by Lyapunov-Perron iteration.

The state space splits along the operator's eigenbasis at a cut index m:
slow coordinates v in R^m, fast remainder z spanned by the remaining
modes.  A graph s maps the slow box to fast states; the fixed-point map
integrates the slow equation backward over a finite horizon and applies
the fast variation-of-constants integral

    Phi(s)(eta) = int_{-T}^{0} e^{Lambda_f r} G(v(r), s(v(r))) dr,

evaluated mode by mode with exact exponential weights per quadrature
interval (a trapezoid in G, exact in the semigroup), which is what makes
the stiff modes come out right.  Contraction is measured, not assumed.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
import scipy.linalg as sla

from .errors import (
    AlignmentError,
    BoxEscapeError,
    ContractViolation,
    CutSelectionError,
    NoContractionError,
)
from .fem import GridFunction, energy_norm, nonlinear_load

__all__ = [
    "SpectralSplit",
    "split",
    "LPConfig",
    "GraphFunction",
    "GraphResult",
    "lp_iterate",
    "compute_graph",
    "graph_diff",
    "cloud_graph_distance",
    "invariance_residual",
    "suggest_box",
]


@dataclass
class SpectralSplit:
    """Full modal decomposition of one operator with a slow/fast cut at m."""

    op: object
    m: int
    values: np.ndarray
    modes: np.ndarray  # nodal, embedded, Mm-orthonormal, one column per mode

    @property
    def beta(self):
        """Backward growth rate of the slow semigroup (largest slow eigenvalue)."""
        return float(self.values[self.m - 1])

    @property
    def gamma(self):
        """Decay rate of the fast semigroup (smallest fast eigenvalue)."""
        return float(self.values[self.m])

    @property
    def slow(self):
        return self.modes[:, : self.m]

    @property
    def fast(self):
        return self.modes[:, self.m:]

    @property
    def fast_values(self):
        return self.values[self.m:]

    def slow_coords(self, u):
        vals = u.values if isinstance(u, GridFunction) else np.asarray(u, float)
        return self.slow.T @ (self.op.Mm @ vals)

    def fast_part(self, u):
        vals = u.values if isinstance(u, GridFunction) else np.asarray(u, float)
        return vals - self.slow @ self.slow_coords(vals)


def split(op, m) -> SpectralSplit:
    """Dense full eigendecomposition of the pencil with a gap check at m."""
    A, M = op.system()
    dim = A.shape[0]
    vals, vecs = sla.eigh(A.toarray(), M.toarray())
    if m < 1 or m >= dim:
        raise ContractViolation(f"cut m={m} outside [1, {dim - 1}]")
    if vals[m] - vals[m - 1] <= 1e-8:
        gaps = {int(j): float(vals[j + 1] - vals[j])
                for j in range(max(0, m - 2), min(dim - 1, m + 2))}
        raise CutSelectionError(m, gaps)
    idx = np.argmax(np.abs(vecs), axis=0)
    signs = np.sign(vecs[idx, np.arange(dim)])
    signs[signs == 0] = 1.0
    vecs = vecs * signs[None, :]
    modes = np.column_stack([op.embed(vecs[:, j]) for j in range(dim)])
    return SpectralSplit(op, m, vals, modes)


@dataclass
class LPConfig:
    m: int = 1
    grid_res: int = 21
    rho_box: np.ndarray | float | None = None
    dt_slow: float = 0.01
    tol: float = 1e-6
    max_iter: int = 40
    escape_factor: float = 4.0
    t_horizon: float | None = None


class GraphFunction:
    """Fast-valued graph over a slow box, multilinear, clamped at the rim.

    Clamping implements the constant extension of a bounded graph beyond
    the box; backward orbits that run past escape_factor times the box
    radius are rejected by the iteration instead.
    """

    def __init__(self, axes, values):
        self.axes = [np.asarray(a, float) for a in axes]
        self.values = np.asarray(values, float)
        if self.values.shape[: len(self.axes)] != tuple(len(a) for a in self.axes):
            raise ContractViolation("graph value grid does not match its axes")

    @property
    def m(self):
        return len(self.axes)

    @property
    def rho(self):
        return np.array([a[-1] for a in self.axes])

    def eval(self, v):
        v = np.atleast_1d(np.asarray(v, float))
        idx = []
        wts = []
        for d, axis in enumerate(self.axes):
            x = min(max(v[d], axis[0]), axis[-1])
            j = min(int(np.searchsorted(axis, x, side="right")) - 1, len(axis) - 2)
            j = max(j, 0)
            t = (x - axis[j]) / (axis[j + 1] - axis[j])
            idx.append(j)
            wts.append(t)
        out = None
        for corner in range(2 ** self.m):
            w = 1.0
            sel = []
            for d in range(self.m):
                bit = (corner >> d) & 1
                w *= wts[d] if bit else (1.0 - wts[d])
                sel.append(idx[d] + bit)
            if w == 0.0:
                continue
            block = self.values[tuple(sel)]
            out = w * block if out is None else out + w * block
        return out

    def grid_points(self):
        mesh = np.meshgrid(*self.axes, indexing="ij")
        return np.stack([g.ravel() for g in mesh], axis=1)


@dataclass
class GraphResult:
    graph: GraphFunction
    split: SpectralSplit
    kappa: float
    changes: list
    iterations: int
    t_horizon: float
    converged: bool
    diagnostics: dict = field(default_factory=dict)


def _phi_weights(z):
    """(psi0, psi1) with psi_k(z) = int_0^1 e^{z t} t^k-ish basis weights.

    psi0 multiplies the left sample, psi1 the right one; stable for the
    strongly negative z of stiff modes and series-continued near zero.
    """
    z = np.asarray(z, float)
    small = np.abs(z) < 1e-5
    zs = np.where(small, 1.0, z)
    ez = np.exp(z)
    psi0 = np.where(small, 0.5 + z / 6.0, (ez - 1.0 - z) / zs**2)
    psi1 = np.where(small, 0.5 + z / 3.0, (ez * (z - 1.0) + 1.0) / zs**2)
    return psi0, psi1


def _prep_factor(w, rho):
    """C^1 cutoff in the slow coordinate: 1 inside the box, 0 beyond 2x.

    The fixed point is computed for this prepared equation, standard for
    graph constructions: backward orbits outside the box see a linear
    field and stay tame, while the graph is untouched wherever the factor
    is 1.
    """
    t = float(np.max(np.abs(w) / rho))
    if t <= 1.0:
        return 1.0
    if t >= 2.0:
        return 0.0
    s = t - 1.0
    return 1.0 - s * s * (3.0 - 2.0 * s)


def _backward_orbit_loads(sp, f, graph, eta, cfg, t_horizon):
    """Backward slow orbit from eta with the nonlinear loads along the way.

    Returns (loads matrix n_nodes x (nq+1), max relative excursion).  The
    slow ODE runs in reversed time sigma = -r, dw/dsigma = Lam_s w - H.
    """
    op = sp.op
    mesh = op.mesh
    lam_s = sp.values[: sp.m]
    Vs = sp.slow
    rho = graph.rho
    n_steps = max(1, int(round(t_horizon / cfg.dt_slow)))
    dt = t_horizon / n_steps

    def state(w):
        return Vs @ w + graph.eval(w)

    def rhs(w):
        theta = _prep_factor(w, rho)
        if theta == 0.0:
            load = np.zeros(mesh.n_nodes)
        else:
            u = state(w)
            load = theta * nonlinear_load(mesh, f, u)
        return lam_s * w - Vs.T @ load, load

    w = np.asarray(eta, float).copy()
    loads = np.empty((mesh.n_nodes, n_steps + 1))
    _, loads[:, 0] = rhs(w)
    excursion = np.max(np.abs(w) / rho)
    for j in range(n_steps):
        k1, _ = rhs(w)
        k2, _ = rhs(w + 0.5 * dt * k1)
        k3, _ = rhs(w + 0.5 * dt * k2)
        k4, _ = rhs(w + dt * k3)
        w = w + (dt / 6.0) * (k1 + 2 * k2 + 2 * k3 + k4)
        excursion = max(excursion, float(np.max(np.abs(w) / rho)))
        if excursion > cfg.escape_factor:
            raise BoxEscapeError(
                f"backward slow orbit reached {excursion:.2f} x rho_box; enlarge rho_box"
            )
        _, loads[:, j + 1] = rhs(w)
    return loads, excursion, dt


def lp_iterate(sp, f, graph, cfg, t_horizon):
    """One sweep of the fixed-point map over every grid node.

    Returns (new values array, diagnostics).  The fast integral uses the
    modal exponential weights from _phi_weights, so arbitrarily stiff
    modes contribute their exact 1/lambda tails.
    """
    lam_f = sp.fast_values
    Vf = sp.fast
    new_values = np.empty_like(graph.values)
    max_exc = 0.0
    nodes = list(np.ndindex(*[len(a) for a in graph.axes]))
    for multi in nodes:
        eta = np.array([graph.axes[d][multi[d]] for d in range(graph.m)])
        loads, exc, dt = _backward_orbit_loads(sp, f, graph, eta, cfg, t_horizon)
        max_exc = max(max_exc, exc)
        G = Vf.T @ loads  # modal loads along the orbit, (dim-m) x (nq+1)
        nq = G.shape[1] - 1
        sig = dt * np.arange(nq)
        decay = np.exp(-np.outer(lam_f, sig))  # e^{-lam * sigma_j}
        psi0, psi1 = _phi_weights(-lam_f * dt)
        C = np.zeros_like(G)
        C[:, :-1] += decay * (dt * psi0)[:, None]
        C[:, 1:] += decay * (dt * psi1)[:, None]
        new_values[multi] = Vf @ np.sum(G * C, axis=1)
    return new_values, {"max_excursion": max_exc}


def _auto_horizon(sp, f, cfg):
    d_est = max(f.sup_bound(), 1.0)
    return float(np.log(10.0 * d_est / cfg.tol) / sp.gamma)


def compute_graph(sp, f, cfg: LPConfig) -> GraphResult:
    """Iterate the graph map from s=0 until the sup change drops below tol.

    kappa is the largest ratio of successive sup-norm changes once the
    iteration has settled (first ratio discarded); kappa >= 1 with no
    convergence raises NoContractionError.
    """
    if cfg.rho_box is None:
        raise ContractViolation("LPConfig.rho_box must be set (see suggest_box)")
    rho = np.broadcast_to(np.atleast_1d(np.asarray(cfg.rho_box, float)), (cfg.m,))
    if np.any(rho <= 0):
        raise ContractViolation("rho_box must be positive")
    axes = [np.linspace(-r, r, cfg.grid_res) for r in rho]
    shape = tuple(cfg.grid_res for _ in range(cfg.m)) + (sp.op.mesh.n_nodes,)
    graph = GraphFunction(axes, np.zeros(shape))
    t_horizon = cfg.t_horizon if cfg.t_horizon is not None else _auto_horizon(sp, f, cfg)

    op = sp.op
    changes = []
    diagnostics = {}
    converged = False
    for it in range(cfg.max_iter):
        new_values, diag = lp_iterate(sp, f, graph, cfg, t_horizon)
        diagnostics.update(diag)
        delta = new_values - graph.values
        flat = delta.reshape(-1, delta.shape[-1])
        change = max(energy_norm(op, row) for row in flat)
        changes.append(change)
        graph = GraphFunction(axes, new_values)
        if change <= cfg.tol:
            converged = True
            break

    ratios = [changes[i + 1] / changes[i] for i in range(1, len(changes) - 1)
              if changes[i] > 0]
    kappa = max(ratios) if ratios else 0.0
    if not converged and kappa >= 1.0:
        raise NoContractionError(changes)
    if not converged:
        raise NoContractionError(changes)  # ran out of iterations while shrinking
    its = len(changes)
    return GraphResult(graph, sp, float(kappa), changes, its, t_horizon, converged,
                       diagnostics)


def _aligned_overlap(sp_eps, sp_0):
    O = sp_eps.slow.T @ (sp_eps.op.Mm @ sp_0.slow)
    s = np.linalg.svd(O, compute_uv=False)
    if np.min(s) < 0.5:
        raise AlignmentError(
            f"slow spaces barely overlap (singular values {s}); cut mismatch?"
        )
    return O


def graph_diff(res_eps: GraphResult, res_0: GraphResult, op_eps,
               radius_frac=0.8) -> dict:
    """sup over the limit-side grid of ||s_eps(O v) - s_0(v)|| in X_eps^{1/2}.

    The limit grid is mapped into the perturbed slow coordinates through
    the Mm overlap of the sign-aligned slow bases; only nodes within
    radius_frac of the smaller box are compared, keeping both graphs away
    from their clamped rims.
    """
    sp_eps, sp_0 = res_eps.split, res_0.split
    if sp_eps.m != sp_0.m:
        raise ContractViolation("graphs have different slow dimensions")
    O = _aligned_overlap(sp_eps, sp_0)
    rho = np.minimum(res_eps.graph.rho, res_0.graph.rho) * radius_frac
    sup = 0.0
    values = []
    for v in res_0.graph.grid_points():
        if np.any(np.abs(v) > rho):
            continue
        s0 = res_0.graph.eval(v)
        se = res_eps.graph.eval(O @ v)
        d = energy_norm(op_eps, se - s0)
        values.append((v.copy(), d))
        sup = max(sup, d)
    if not values:
        raise ContractViolation("comparison radius excluded every grid node")
    return {"sup": sup, "pointwise": values, "radius": rho}


def cloud_graph_distance(res: GraphResult, op, cloud):
    """max over cloud rows of the energy distance to the graph fiber."""
    sp = res.split
    worst = 0.0
    for row in np.atleast_2d(cloud):
        a = sp.slow_coords(row)
        resid = row - sp.slow @ a - res.graph.eval(a)
        worst = max(worst, energy_norm(op, resid))
    return worst


def invariance_residual(res: GraphResult, f, flow, coords, t=0.5):
    """Flow graph points for time t and measure the return distance to the graph.

    An invariant graph reproduces itself under the full nonlinear flow up
    to interpolation and quadrature error; this is the a-posteriori check
    that the fixed point means what it claims.
    """
    from .semigroup import step_to

    sp = res.split
    op = sp.op
    worst = 0.0
    for a in coords:
        a = np.atleast_1d(np.asarray(a, float))
        u0 = sp.slow @ a + res.graph.eval(a)
        u1 = step_to(op, f, u0, t, flow)
        a1 = sp.slow_coords(u1.values)
        resid = u1.values - sp.slow @ a1 - res.graph.eval(a1)
        worst = max(worst, energy_norm(op, resid))
    return worst


def suggest_box(sp: SpectralSplit, states, margin=2.0, floor=0.25):
    """Per-axis box radius covering the slow coordinates of given states."""
    extent = np.zeros(sp.m)
    for st in states:
        vals = st.values if isinstance(st, GridFunction) else np.asarray(st, float)
        extent = np.maximum(extent, np.abs(sp.slow_coords(vals)))
    return np.maximum(margin * extent, floor)
