"""Static solves and resolvent-difference norms.

The quantity of interest is u_eps - u_0 for loads that are constant on
the large-diffusion interval, measured in the perturbed energy norm, and
its operator-norm analogue

    || (mu + A_eps)^{-1} - (mu + A_0)^{-1} ||_{L(L2_c, X_eps^{1/2})}

computed as the top generalized eigenvalue of the exact finite
dimensional pencil (no sampling).
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
import scipy.linalg as sla
import scipy.sparse.linalg as spla

from .errors import ContractViolation, DenseCostGuardError
from .fem import GridFunction, energy_norm, l2_norm

__all__ = [
    "EllipticSolution",
    "solve",
    "solution_diff",
    "solution_op_diff_norm",
    "shifted_diff_norm",
    "standard_loads",
]


@dataclass
class EllipticSolution:
    u: GridFunction
    residual: float
    kind: str


def solve(op, g, mu=0.0) -> EllipticSolution:
    """Galerkin solve of (mu + A) u = g with g a GridFunction.

    For the limit operator the load is first projected onto the
    constrained test space (B^T applied to the load vector), and the
    solution comes back embedded, tagged constrained.
    """
    gv = g.values if isinstance(g, GridFunction) else np.asarray(g, dtype=float)
    load_full = op.Mm @ gv
    solver = op.shifted_solver(mu) if mu != 0.0 else None
    A_sys, M_sys = op.system()
    if op.kind == "limit":
        rhs = op.B.T @ load_full
    else:
        rhs = load_full
    if solver is None:
        coeffs = op.solve_system(rhs)
    else:
        coeffs = solver(rhs)
    shifted = (A_sys + mu * M_sys) if mu != 0.0 else A_sys
    res_vec = shifted @ coeffs - rhs
    # backward error: ||r|| / (||A|| ||u|| + ||b||), safe for stiff profiles
    denom = (spla.norm(shifted, np.inf) * float(np.linalg.norm(coeffs))
             + float(np.linalg.norm(rhs)))
    residual = float(np.linalg.norm(res_vec)) / (denom if denom > 0 else 1.0)
    if residual > 1e-12:
        raise ContractViolation(f"direct solve backward error {residual} above 1e-12")
    space = "constrained" if op.kind == "limit" else "full"
    return EllipticSolution(GridFunction(op.mesh, op.embed(coeffs), space), residual, op.kind)


def _require_constrained_load(op_limit, g):
    gv = g.values if isinstance(g, GridFunction) else np.asarray(g, dtype=float)
    block = gv[op_limit.mesh.omega0_slice()]
    if block.size and np.max(np.abs(block - block[0])) > 1e-12 * max(1.0, np.max(np.abs(gv))):
        raise ContractViolation("load must be constant on [x1, x2] (L2_c membership)")
    return gv


def solution_diff(op_eps, op_limit, g, mu=0.0) -> float:
    """|| u_eps - u_0 ||_{X_eps^{1/2}} for one admissible load.

    Both solves share the mesh; g must be constant on the lumped nodes and
    normalized to ||g||_{L2} <= 1.
    """
    gv = _require_constrained_load(op_limit, g)
    if l2_norm(op_eps, gv) > 1.0 + 1e-9:
        raise ContractViolation("load must satisfy ||g||_{L2} <= 1")
    u_eps = solve(op_eps, GridFunction(op_eps.mesh, gv), mu=mu)
    u_lim = solve(op_limit, GridFunction(op_limit.mesh, gv), mu=mu)
    return energy_norm(op_eps, u_eps.u.values - u_lim.u.values)


def _difference_map(op_eps, op_limit, mu):
    """Matvec pair for D = (mu+A_eps)^{-1} M B - B (mu+A_0)^{-1} M_c and its transpose."""
    B = op_limit.B
    Mm = op_eps.Mm
    M_c = op_limit.M_c
    if mu == 0.0:
        solve_eps = op_eps.solve_full
        solve_lim = op_limit.solve_constrained
    else:
        solve_eps = op_eps.shifted_solver(mu)
        solve_lim = op_limit.shifted_solver(mu)

    def D(ghat):
        load = Mm @ (B @ ghat)
        return solve_eps(load) - B @ solve_lim(B.T @ load)

    def Dt(y):
        return B.T @ (Mm @ solve_eps(y)) - M_c @ solve_lim(B.T @ y)

    return D, Dt


def solution_op_diff_norm(op_eps, op_limit, mu=0.0, method="auto") -> float:
    """Operator norm of the resolvent difference, L2_c -> X_eps^{1/2}.

    The norm squared is the top eigenvalue of (D^T A_eps D, M_c).  'dense'
    builds D column by column and calls the dense generalized solver
    (guarded to small systems); 'lanczos' runs shift-free eigsh on the
    matrix-free pencil with a deterministic start vector.
    """
    n_c = op_limit.A_c.shape[0]
    if method == "auto":
        method = "dense" if n_c <= 420 else "lanczos"
    D, Dt = _difference_map(op_eps, op_limit, mu)
    A = op_eps.A

    if method == "dense":
        if n_c > 2048:
            raise DenseCostGuardError(f"dense op-norm limited to 2048 columns, got {n_c}")
        cols = np.eye(n_c)
        Dmat = np.column_stack([D(cols[:, j]) for j in range(n_c)])
        K = Dmat.T @ (A @ Dmat)
        K = 0.5 * (K + K.T)
        vals = sla.eigh(K, op_limit.M_c.toarray(), eigvals_only=True,
                        subset_by_index=[n_c - 1, n_c - 1])
        return float(np.sqrt(max(vals[-1], 0.0)))

    if method != "lanczos":
        raise ContractViolation(f"unknown method {method!r}")

    def matvec(x):
        return Dt(A @ D(x))

    Kop = spla.LinearOperator((n_c, n_c), matvec=matvec, dtype=float)
    v0 = np.ones(n_c) / np.sqrt(n_c)
    vals = spla.eigsh(Kop, k=1, M=op_limit.M_c, which="LA", v0=v0,
                      maxiter=5000, return_eigenvectors=False)
    return float(np.sqrt(max(vals[0], 0.0)))


def shifted_diff_norm(op_eps, op_limit, mu, method="auto") -> float:
    """Same pencil with A replaced by mu*M + A in both resolvents."""
    if mu < 0:
        raise ContractViolation("shift mu must be nonnegative")
    return solution_op_diff_norm(op_eps, op_limit, mu=mu, method=method)


def standard_loads(op_limit):
    """Deterministic admissible loads: a constant and two lumped cosines.

    The cosines are L2-projected onto the constrained space (their values
    on [x1, x2] replaced by the interval average) and normalized.
    """
    mesh = op_limit.mesh
    x1, x2 = mesh.x1, mesh.x2
    out = {}
    nodes = mesh.nodes
    for name, k in (("cos1", 1), ("cos2", 2)):
        vals = np.cos(k * np.pi * nodes)
        avg = (np.sin(k * np.pi * x2) - np.sin(k * np.pi * x1)) / (k * np.pi * (x2 - x1))
        vals[mesh.omega0_slice()] = avg
        nrm = l2_norm(op_limit, vals)
        out[name] = GridFunction(mesh, vals / nrm, "constrained")
    ones = np.ones(mesh.n_nodes)
    out["const"] = GridFunction(mesh, ones / l2_norm(op_limit, ones), "constrained")
    return out
