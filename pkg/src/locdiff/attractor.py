"""Attractor sampling by unstable-manifold shooting and Hausdorff rates.

The global attractor of the dissipative flow is the union of equilibria
and the heteroclinics between them; each unstable direction is seeded at
delta_launch off its equilibrium and integrated until it lands near
another one.  Clouds are resampled to uniform energy arclength so that
Hausdorff distances are parameterization-free, and the distance itself
is the symmetric sum of directed sup-inf distances in the perturbed
energy norm.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import ContractViolation, StructuralChangeError
from .fem import GridFunction, energy_norm
from .semigroup import FlowConfig, integrate

__all__ = [
    "AttractorSample",
    "sample_attractor",
    "hausdorff",
    "directed_distance",
]


@dataclass
class AttractorSample:
    points: np.ndarray  # (n_points, n_nodes) nodal rows
    provenance: list
    eps: float | None
    mesh_n: int


def _resample_arclength(op, snaps, n_out):
    """Uniform energy-arclength resampling of a polyline of states."""
    if len(snaps) <= 2 or n_out <= 2:
        return np.asarray(snaps)
    P = np.asarray(snaps)
    seg = np.array([energy_norm(op, P[i + 1] - P[i]) for i in range(len(P) - 1)])
    s = np.concatenate([[0.0], np.cumsum(seg)])
    total = s[-1]
    if total <= 0:
        return P[:1]
    targets = np.linspace(0.0, total, n_out)
    out = np.empty((n_out, P.shape[1]))
    j = 0
    for i, t in enumerate(targets):
        while j < len(seg) - 1 and s[j + 1] < t:
            j += 1
        w = 0.0 if seg[j] == 0 else (t - s[j]) / seg[j]
        out[i] = (1 - w) * P[j] + w * P[j + 1]
    return out


def sample_attractor(op, f, equilibria, flow=None, points_per_branch=200,
                     delta_launch=1e-4, conv_tol=1e-5, t_max=200.0,
                     snap_stride=10) -> AttractorSample:
    """Equilibria plus arclength-resampled heteroclinic branches.

    Each unstable eigenvector of each unstable equilibrium is followed in
    both directions until the orbit is conv_tol-close (energy norm) to a
    different equilibrium or t_max elapses.  Unbounded orbits raise; the
    dissipative cutoff makes them structurally impossible, so one firing
    means the setup is wrong.
    """
    if flow is None:
        flow = FlowConfig(dt=2e-3)
    eq_mat = np.array([eq.u.values for eq in equilibria])
    rows = [eq.u.values.copy() for eq in equilibria]
    provenance = [f"equilibrium:{eq.label}" for eq in equilibria]

    for i_eq, eq in enumerate(equilibria):
        if eq.morse_index == 0:
            continue
        others = [j for j in range(len(equilibria)) if j != i_eq]
        for j_vec in range(eq.unstable_modes.shape[1]):
            psi = eq.unstable_modes[:, j_vec]
            for direction in (+1.0, -1.0):
                u0 = eq.u.values + direction * delta_launch * psi
                snaps = [u0.copy()]
                counter = {"k": 0}

                def observer(t, coeffs):
                    counter["k"] += 1
                    if counter["k"] % snap_stride == 0:
                        snaps.append(op.embed(coeffs).copy())

                def stop_when(t, coeffs):
                    nodal = op.embed(coeffs)
                    for j in others:
                        if energy_norm(op, nodal - eq_mat[j]) <= conv_tol:
                            return True
                    return False

                coeffs, t_end = integrate(op, f, u0, t_max, flow,
                                          observer=observer, stop_when=stop_when)
                snaps.append(op.embed(coeffs).copy())
                branch = _resample_arclength(op, snaps, points_per_branch)
                rows.extend(list(branch))
                provenance.extend(
                    [f"heteroclinic:{eq.label}:mode{j_vec}:{'+' if direction > 0 else '-'}"]
                    * len(branch)
                )
    return AttractorSample(np.array(rows), provenance, op.eps, op.mesh.n_elements)


def _pairwise_energy_sq(E, U, W):
    """Squared energy distances between row sets U and W under form matrix E."""
    EU = (E @ U.T).T
    EW = (E @ W.T).T
    uu = np.sum(U * EU, axis=1)
    ww = np.sum(W * EW, axis=1)
    cross = U @ EW.T
    d2 = uu[:, None] + ww[None, :] - 2.0 * cross
    return np.maximum(d2, 0.0)


def directed_distance(cloud_a, cloud_b, op) -> float:
    """sup over a in A of inf over b in B of the perturbed energy distance."""
    A = np.atleast_2d(cloud_a.points if isinstance(cloud_a, AttractorSample) else cloud_a)
    B = np.atleast_2d(cloud_b.points if isinstance(cloud_b, AttractorSample) else cloud_b)
    if A.shape[1] != B.shape[1]:
        raise ContractViolation("clouds live on different meshes")
    d2 = _pairwise_energy_sq(op.A, A, B)
    return float(np.max(np.sqrt(np.min(d2, axis=1))))


def hausdorff(cloud_a, cloud_b, op) -> float:
    """Symmetric Hausdorff distance under the sum convention.

    d(A, B) = sup_A inf_B + sup_B inf_A, both in the energy norm of op.
    """
    return directed_distance(cloud_a, cloud_b, op) + directed_distance(cloud_b, cloud_a, op)


def check_same_structure(eqs_a, eqs_b):
    """Equilibrium counts and Morse data must match along a sweep."""
    if len(eqs_a) != len(eqs_b):
        raise StructuralChangeError(
            f"equilibrium count changed: {len(eqs_a)} vs {len(eqs_b)}"
        )
    for x, y in zip(eqs_a, eqs_b):
        if x.morse_index != y.morse_index:
            raise StructuralChangeError(
                f"Morse index changed for {x.label}: {x.morse_index} vs {y.morse_index}"
            )
