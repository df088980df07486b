"""Equilibria: Newton solves, limit-problem enumeration, eps-continuation.

The stationary Galerkin system is A u = load(f(u)) with the load and its
exact Jacobian (a weighted mass matrix with weight f'(u)) evaluated by
the same 3-point Gauss rule, so Newton is quadratic all the way down.
Limit equilibria live in the constrained space; their eps-relatives come
from continuation inside the matching radius, the ball where hyperbolicity
makes the continued root unique.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
import scipy.sparse.linalg as spla

from .errors import (
    ContractViolation,
    HyperbolicityError,
    NonconvergenceError,
    UniquenessViolationError,
)
from .fem import GAUSS_PTS, GridFunction, energy_norm, weighted_mass

__all__ = [
    "Equilibrium",
    "newton",
    "hyperbolicity",
    "find_all_limit",
    "continue_to_eps",
    "matching_radius",
]

NEWTON_TOL = 1e-10
NEWTON_MAX_ITER = 50


@dataclass
class Equilibrium:
    u: GridFunction
    residual: float
    morse_index: int
    margin: float
    eps: float | None
    unstable_modes: np.ndarray = field(repr=False, default=None)
    linearization_head: np.ndarray = field(repr=False, default=None)

    @property
    def label(self):
        mesh = self.u.mesh
        v = self.u.values
        mean = float(np.sum(mesh.h * (v[:-1] + v[1:]) / 2.0))
        return f"u~{mean:+.4f}"

    def to_record(self, mesh_n=None):
        return {
            "eps": self.eps,
            "label": self.label,
            "morse_index": int(self.morse_index),
            "margin": float(self.margin),
            "residual": float(self.residual),
            "mesh_n": mesh_n if mesh_n is not None else self.u.mesh.n_elements,
            "values": [round(float(v), 12) for v in self.u.values],
        }


def _gauss_values(mesh, values):
    g = GAUSS_PTS
    return values[:-1, None] * (1 - g)[None, :] + values[1:, None] * g[None, :]


def _load_and_jacobian_weight(op, f, nodal):
    """Nonlinear load in the op's coefficient space plus the f'(u) Gauss table."""
    from .fem import nonlinear_load

    mesh = op.mesh
    load_full = nonlinear_load(mesh, f, nodal)
    wq = f.d(_gauss_values(mesh, nodal))
    if op.kind == "limit":
        return op.B.T @ load_full, wq
    return load_full, wq


def _residual_dual_norm(op, r):
    """Energy norm of the Riesz representer of the algebraic residual."""
    z = op.solve_system(r)
    return float(np.sqrt(max(r @ z, 0.0)))


def newton(op, f, u_init, tol=NEWTON_TOL, max_iter=NEWTON_MAX_ITER):
    """Newton iteration for A u = load(f(u)) in the operator's own space.

    Returns (GridFunction, residual, iterations).  The residual is the
    dual energy norm of A u - load(f(u)); nonconvergence raises and
    carries the last iterate for diagnosis.
    """
    if tol < 1e-12:
        raise ContractViolation("Newton tol below 1e-12 is not resolvable in doubles")
    A_sys, _ = op.system()
    vals = u_init.values if isinstance(u_init, GridFunction) else np.asarray(u_init, float)
    coeffs = op.restrict_values(vals)
    history = []
    eps_mach = float(np.finfo(float).eps)
    for it in range(max_iter):
        nodal = op.embed(coeffs)
        load_sys, wq = _load_and_jacobian_weight(op, f, nodal)
        r = A_sys @ coeffs - load_sys
        rnorm = _residual_dual_norm(op, r)
        history.append(rnorm)
        # the residual cannot be evaluated below the roundoff of A u - b
        # itself; on stiff profiles that floor sits far above macheps
        noise = eps_mach * (abs(A_sys) @ np.abs(coeffs) + np.abs(load_sys))
        floor = 4.0 * _residual_dual_norm(op, noise)
        if rnorm <= max(tol, floor):
            space = "constrained" if op.kind == "limit" else "full"
            return GridFunction(op.mesh, nodal, space), rnorm, it
        W = weighted_mass(op.mesh, wq)
        if op.kind == "limit":
            J = A_sys - op.B.T @ W @ op.B
        else:
            J = A_sys - W
        try:
            delta = spla.splu(J.tocsc()).solve(r)
        except RuntimeError as exc:
            raise NonconvergenceError(
                f"Jacobian factorization failed at iteration {it}: {exc}",
                last_iterate=op.embed(coeffs), residuals=history,
            )
        coeffs = coeffs - delta
        if not np.all(np.isfinite(coeffs)):
            raise NonconvergenceError("Newton iterate diverged to non-finite values",
                                      last_iterate=None, residuals=history)
    raise NonconvergenceError(
        f"Newton did not reach tol={tol} in {max_iter} iterations "
        f"(last residual {history[-1]:.3e})",
        last_iterate=op.embed(coeffs), residuals=history,
    )


def hyperbolicity(op, f, u, k=6):
    """Leading spectrum of the linearization pencil (A - W(f'(u)), M).

    Returns (morse_index, margin, head_values, unstable_nodal).  k grows
    automatically if all requested eigenvalues come back negative, so the
    Morse index is never truncated silently.
    """
    A_sys, M_sys = op.system()
    vals = u.values if isinstance(u, GridFunction) else np.asarray(u, float)
    W = weighted_mass(op.mesh, f.d(_gauss_values(op.mesh, vals)))
    if op.kind == "limit":
        L = (A_sys - op.B.T @ W @ op.B).tocsc()
    else:
        L = (A_sys - W).tocsc()

    dim = A_sys.shape[0]
    fmax = float(np.max(f.d(np.linspace(-f.cutoff_K, f.cutoff_K, 2001))))
    sigma = op.config.m0 - max(fmax, 0.0) - 1.0  # strictly below the spectrum
    k_eff = min(k, dim - 1)
    while True:
        vals_head, vecs = spla.eigsh(L, k=k_eff, M=M_sys, sigma=sigma, which="LM",
                                     v0=np.ones(dim) / np.sqrt(dim))
        order = np.argsort(vals_head)
        vals_head, vecs = vals_head[order], vecs[:, order]
        if vals_head[-1] >= 0 or k_eff >= min(4 * k, dim - 1):
            break
        k_eff = min(2 * k_eff, dim - 1)
    morse = int(np.sum(vals_head < 0.0))
    margin = float(np.min(np.abs(vals_head)))
    unstable = np.column_stack([op.embed(vecs[:, j]) for j in range(morse)]) \
        if morse else np.zeros((op.mesh.n_nodes, 0))
    return morse, margin, vals_head, unstable


def _assemble_equilibrium(op, f, gf, residual, eps, delta_hyp):
    morse, margin, head, unstable = hyperbolicity(op, f, gf)
    if margin < delta_hyp:
        raise HyperbolicityError(
            f"equilibrium with mean {np.mean(gf.values):+.4f} has margin "
            f"{margin:.3e} < {delta_hyp}"
        )
    return Equilibrium(gf, residual, morse, margin, eps, unstable, head)


def find_all_limit(op_limit, f, delta_hyp=1e-3, tol=NEWTON_TOL):
    """Enumerate limit equilibria from the deterministic seed family.

    Seeds: 17 constants spanning [-K, K] plus +-0.1 phi_1 perturbations of
    each constant.  Converged solutions are deduplicated at 1e-6 in the
    limit energy norm, then every member must clear the hyperbolicity
    margin or the whole enumeration fails loudly.
    """
    if op_limit.kind != "limit":
        raise ContractViolation("find_all_limit needs the limit operator")
    from .spectral import eigenpairs

    K = f.cutoff_K
    mesh = op_limit.mesh
    phi1 = eigenpairs(op_limit, 2)[1].vector.values
    seeds = []
    for c in np.linspace(-K, K, 17):
        base = np.full(mesh.n_nodes, c)
        seeds.append(base)
        seeds.append(base + 0.1 * phi1)
        seeds.append(base - 0.1 * phi1)

    found = []
    for seed in seeds:
        try:
            gf, res, _ = newton(op_limit, f, seed, tol=tol)
        except NonconvergenceError:
            continue
        if np.max(np.abs(gf.values)) > K:
            continue  # artifact of the cutoff region, not a physical equilibrium
        if all(energy_norm(op_limit, gf.values - q[0].values) > 1e-6 for q in found):
            found.append((gf, res))

    found.sort(key=lambda pair: float(np.mean(pair[0].values)))
    return [_assemble_equilibrium(op_limit, f, gf, res, None, delta_hyp)
            for gf, res in found]


def matching_radius(equilibria, op_limit):
    """Half the smallest pairwise limit-energy distance; the uniqueness ball."""
    if len(equilibria) < 2:
        return np.inf
    dists = []
    for i in range(len(equilibria)):
        for j in range(i + 1, len(equilibria)):
            dists.append(energy_norm(op_limit,
                                     equilibria[i].u.values - equilibria[j].u.values))
    return 0.5 * min(dists)


def continue_to_eps(eq0, op_eps, f, delta, delta_hyp=1e-3, tol=NEWTON_TOL):
    """Continue one limit equilibrium to the perturbed operator.

    The Newton solve starts from the embedded limit equilibrium and must
    land inside the matching ball of radius delta in the perturbed energy
    norm, otherwise the pairing is not trustworthy and we refuse.
    """
    if op_eps.kind != "perturbed":
        raise ContractViolation("continuation targets the perturbed operator")
    gf, res, _ = newton(op_eps, f, eq0.u.values, tol=tol)
    dist = energy_norm(op_eps, gf.values - eq0.u.values)
    if np.isfinite(delta) and dist > delta:
        raise UniquenessViolationError(
            f"continued equilibrium moved {dist:.3e} > matching radius {delta:.3e}"
        )
    eq = _assemble_equilibrium(op_eps, f, gf, res, op_eps.eps, delta_hyp)
    if eq.morse_index != eq0.morse_index:
        raise UniquenessViolationError(
            f"Morse index changed {eq0.morse_index} -> {eq.morse_index} during continuation"
        )
    return eq, dist
