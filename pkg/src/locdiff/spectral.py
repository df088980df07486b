"""Generalized eigenpairs, gap diagnostics and spectral projections.

All problems are symmetric pencils (A, M) with M the P1 mass matrix, so
shift-invert Lanczos at sigma=0 gives the low end of the spectrum; the
dense LAPACK route stays available as an oracle.  High frequencies obey
lambda_i ~ (i*pi/l)^2 with l = int p^{-1/2}, which calibrates the gap
model used by the cut diagnostics.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
import scipy.linalg as sla
import scipy.sparse.linalg as spla

from .errors import AmbiguityError, ContractViolation, CutSelectionError
from .fem import GridFunction

__all__ = [
    "Eigenpair",
    "eigenpairs",
    "gap_profile",
    "eigenvalue_diff",
    "SpectralProjection",
    "spectral_projection",
    "basis_angles",
]


@dataclass
class Eigenpair:
    index: int
    value: float
    vector: GridFunction
    eps: float | None


def _fix_signs(vecs):
    """Deterministic orientation: the entry of largest magnitude is positive."""
    idx = np.argmax(np.abs(vecs), axis=0)
    signs = np.sign(vecs[idx, np.arange(vecs.shape[1])])
    signs[signs == 0] = 1.0
    return vecs * signs[None, :]


def eigenpairs(op, k, method="lanczos"):
    """First k eigenpairs of the operator pencil, ascending, M-orthonormal.

    k is capped at a quarter of the resolved dimension; P1 frequencies
    above that are discretization artifacts.
    """
    A, M = op.system()
    dim = A.shape[0]
    if not (1 <= k <= dim // 4):
        raise ContractViolation(f"k={k} outside [1, dim/4={dim // 4}]")

    if method == "dense":
        vals, vecs = sla.eigh(A.toarray(), M.toarray())
        vals, vecs = vals[:k], vecs[:, :k]
    elif method == "lanczos":
        ncv = min(dim, max(4 * k + 20, 40))
        vals, vecs = spla.eigsh(A, k=k, M=M, sigma=0.0, which="LM",
                                v0=np.ones(dim) / np.sqrt(dim), ncv=ncv)
        order = np.argsort(vals)
        vals, vecs = vals[order], vecs[:, order]
    else:
        raise ContractViolation(f"unknown eigen method {method!r}")

    gram = vecs.T @ (M @ vecs)
    if np.max(np.abs(gram - np.eye(k))) > 1e-10:
        # re-orthonormalize in the M inner product before giving up
        L = np.linalg.cholesky(gram)
        vecs = np.linalg.solve(L, vecs.T).T
        gram = vecs.T @ (M @ vecs)
        if np.max(np.abs(gram - np.eye(k))) > 1e-10:
            raise ContractViolation("eigenvectors lost M-orthonormality")
    if np.any(np.diff(vals) < -1e-12):
        raise ContractViolation("eigenvalues came back out of order")
    if vals[0] < op.config.m0 - 1e-8:
        raise ContractViolation(
            f"ground eigenvalue {vals[0]} below the coercivity floor {op.config.m0}"
        )

    vecs = _fix_signs(vecs)
    space = "constrained" if op.kind == "limit" else "full"
    out = []
    for i in range(k):
        nodal = op.embed(vecs[:, i])
        out.append(Eigenpair(i, float(vals[i]), GridFunction(op.mesh, nodal, space), op.eps))
    return out


def gap_profile(op, k, method="lanczos"):
    """Gaps lambda_{i+1}-lambda_i and their ratio to the (2i+1) pi^2 / l^2 model.

    Returns a dict of arrays: index, gap, model, ratio.  The model uses the
    operator's own l = int p^{-1/2}; ratios for small i are reported but
    only the tail is expected to approach 1.
    """
    pairs = eigenpairs(op, k + 1, method=method)
    vals = np.array([p.value for p in pairs])
    gaps = np.diff(vals)
    l = op.l_scale()
    idx = np.arange(k)
    model = (2 * idx + 1) * np.pi**2 / l**2
    return {"index": idx, "gap": gaps, "model": model, "ratio": gaps / model, "l": l}


def _check_simple(vals, i, tol=1e-6):
    if i > 0 and abs(vals[i] - vals[i - 1]) <= tol:
        return False
    if i + 1 < len(vals) and abs(vals[i + 1] - vals[i]) <= tol:
        return False
    return True


def eigenvalue_diff(op_eps, op_limit, i, method="lanczos"):
    """|lambda_i^eps - lambda_i^0| with a simplicity guard on both sides."""
    k = i + 2
    vals_eps = np.array([p.value for p in eigenpairs(op_eps, k, method=method)])
    vals_lim = np.array([p.value for p in eigenpairs(op_limit, k, method=method)])
    for tag, vals in (("perturbed", vals_eps), ("limit", vals_lim)):
        if not _check_simple(vals, i):
            raise AmbiguityError(
                f"eigenvalue {i} of the {tag} operator is not simple at 1e-6; "
                f"neighborhood {vals[max(0, i - 1): i + 2]}"
            )
    return float(abs(vals_eps[i] - vals_lim[i]))


class SpectralProjection:
    """Rank-m M-orthogonal projection onto the low eigenspace.

    apply() and complement() act on full nodal vectors; the projection is
    self-adjoint in the M inner product and commutes with the operator by
    construction (up to eigensolver accuracy).
    """

    def __init__(self, op, basis_nodal, values):
        self.op = op
        self.basis = basis_nodal  # (n_nodes, m), M-orthonormal
        self.values = np.asarray(values)
        self.rank = basis_nodal.shape[1]

    def coords(self, u):
        vals = u.values if isinstance(u, GridFunction) else np.asarray(u)
        return self.basis.T @ (self.op.Mm @ vals)

    def apply(self, u):
        return self.basis @ self.coords(u)

    def complement(self, u):
        vals = u.values if isinstance(u, GridFunction) else np.asarray(u)
        return vals - self.apply(vals)


def spectral_projection(op, m, method="lanczos") -> SpectralProjection:
    """Projection onto the first m modes, refusing degenerate cuts.

    A cut needs lambda_{m-1} < lambda_m - 1e-8; otherwise the nearby gaps
    are reported so the caller can move the cut.
    """
    if m < 1:
        raise ContractViolation("cut index m must be >= 1")
    k = min(m + 3, max(op.dim // 4, m + 1))
    pairs = eigenpairs(op, max(k, m + 1), method=method)
    vals = np.array([p.value for p in pairs])
    if vals[m] - vals[m - 1] <= 1e-8:
        gaps = {int(j): float(vals[j + 1] - vals[j])
                for j in range(max(0, m - 2), min(len(vals) - 1, m + 2))}
        raise CutSelectionError(m, gaps)
    basis = np.column_stack([p.vector.values for p in pairs[:m]])
    return SpectralProjection(op, basis, vals[:m])


def basis_angles(proj_a, proj_b):
    """Principal angles between two projection ranges in the M inner product."""
    if proj_a.rank != proj_b.rank:
        raise ContractViolation("projections must share rank to compare")
    overlap = proj_a.basis.T @ (proj_a.op.Mm @ proj_b.basis)
    s = np.linalg.svd(overlap, compute_uv=False)
    return np.arccos(np.clip(s, -1.0, 1.0))
