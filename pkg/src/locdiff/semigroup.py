"""Time stepping for the parabolic flow and the time-one comparison.

Default scheme is fully implicit Euler: the 1/eps stiffness sits in the
linear part, so the linear solve is the stable backbone and the bounded
Lipschitz nonlinearity is folded in by a chord iteration against the
frozen matrix M + dt A (contraction factor ~ dt * Lip(f), a couple of
sweeps per step).  imex-cn treats the linear part by Crank-Nicolson and
f explicitly.  Limit flows run in constrained coefficients throughout,
so they stay in the constrained space exactly.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
import scipy.linalg as sla

from .errors import (
    ContractViolation,
    DenseCostGuardError,
    DynamicsAnomalyError,
    StiffnessError,
)
from .fem import GridFunction, energy_norm, nonlinear_load

__all__ = ["FlowConfig", "step_to", "integrate", "time_one_diff", "expm_oracle",
           "trajectory_csv"]


@dataclass
class FlowConfig:
    dt: float = 1e-3
    scheme: str = "implicit-euler"
    t_final: float = 1.0
    newton_tol: float = 1e-11
    max_halvings: int = 20
    chord_max_iter: int = 30
    bound_factor: float = 3.0  # |u|_inf beyond bound_factor*K is an anomaly

    def __post_init__(self):
        if self.scheme not in ("implicit-euler", "imex-cn"):
            raise ContractViolation(f"unknown scheme {self.scheme!r}")
        if self.dt <= 0:
            raise ContractViolation("dt must be positive")


class _Stepper:
    """Scheme state bound to one operator; factorizations cached per dt."""

    def __init__(self, op, f, flow):
        self.op = op
        self.f = f
        self.flow = flow
        self.A, self.M = op.system()
        self._solvers = {}

    def _solver(self, dt, theta):
        key = (round(dt, 16), theta)
        if key not in self._solvers:
            import scipy.sparse.linalg as spla

            mat = (self.M + theta * dt * self.A).tocsc()
            self._solvers[key] = spla.factorized(mat)
        return self._solvers[key]

    def _load(self, coeffs):
        nodal = self.op.embed(coeffs)
        lf = nonlinear_load(self.op.mesh, self.f, nodal)
        if self.op.kind == "limit":
            return self.op.B.T @ lf
        return lf

    def _step_implicit(self, coeffs, dt, depth=0, guess=None):
        if depth > self.flow.max_halvings:
            raise StiffnessError(
                f"step rejection cascade exceeded {self.flow.max_halvings} halvings"
            )
        solve = self._solver(dt, 1.0)
        rhs_base = self.M @ coeffs
        u = coeffs if guess is None else guess
        scale = 1.0 + float(np.max(np.abs(coeffs)))
        for _ in range(self.flow.chord_max_iter):
            target = rhs_base + dt * self._load(u)
            u_new = solve(target)
            err = float(np.max(np.abs(u_new - u)))
            u = u_new
            if err <= self.flow.newton_tol * scale:
                return u
        # chord iteration stalled: subdivide the step
        half = self._step_implicit(coeffs, dt / 2.0, depth + 1)
        return self._step_implicit(half, dt / 2.0, depth + 1)

    def _step_imex(self, coeffs, dt):
        solve = self._solver(dt, 0.5)
        rhs = self.M @ coeffs - 0.5 * dt * (self.A @ coeffs) + dt * self._load(coeffs)
        return solve(rhs)

    def step(self, coeffs, dt, guess=None):
        if self.flow.scheme == "implicit-euler":
            return self._step_implicit(coeffs, dt, guess=guess)
        return self._step_imex(coeffs, dt)


def integrate(op, f, u0, t_stop, flow, observer=None, stop_when=None):
    """March from u0 to t_stop; optional observer(t, coeffs) and early stop.

    stop_when(t, coeffs) returning True ends the run after that step.
    Returns (coeffs, t_reached).  Blow-up past bound_factor * cutoff_K is
    a dynamics anomaly, not a stiffness problem, and raises accordingly.
    """
    vals = u0.values if isinstance(u0, GridFunction) else np.asarray(u0, float)
    coeffs = op.restrict_values(vals)
    stepper = _Stepper(op, f, flow)
    bound = flow.bound_factor * f.cutoff_K
    t = 0.0
    if observer is not None:
        observer(t, coeffs)
    prev = None
    while t < t_stop - 1e-14:
        dt = min(flow.dt, t_stop - t)
        # warm-start the chord iteration with a linear predictor; at a
        # fixed point this is the answer already, so drift stays at roundoff
        guess = 2.0 * coeffs - prev if prev is not None else None
        prev = coeffs
        coeffs = stepper.step(coeffs, dt, guess=guess)
        t += dt
        if not np.all(np.isfinite(coeffs)) or np.max(np.abs(op.embed(coeffs))) > bound:
            raise DynamicsAnomalyError(f"trajectory left the absorbing range at t={t:.4g}")
        if observer is not None:
            observer(t, coeffs)
        if stop_when is not None and stop_when(t, coeffs):
            break
    return coeffs, t


def step_to(op, f, u0, t_stop, flow) -> GridFunction:
    """Nonlinear flow from u0 for time t_stop, returned as a GridFunction."""
    coeffs, _ = integrate(op, f, u0, t_stop, flow)
    space = "constrained" if op.kind == "limit" else "full"
    return GridFunction(op.mesh, op.embed(coeffs), space)


def time_one_diff(op_eps, op_limit, f, w0, flow=None) -> float:
    """||T_eps(1) w0 - T_0(1) w0||_{X_eps^{1/2}} with matched stepping.

    w0 must be constrained (an admissible shared initial state); both
    flows use the same scheme and dt so the comparison isolates the
    operator difference.
    """
    if flow is None:
        flow = FlowConfig()
    w0v = w0.values if isinstance(w0, GridFunction) else np.asarray(w0, float)
    block = w0v[op_limit.mesh.omega0_slice()]
    if block.size and np.max(np.abs(block - block[0])) > 1e-10 * max(1.0, np.max(np.abs(w0v))):
        raise ContractViolation("w0 must lie in the constrained space")
    u_eps = step_to(op_eps, f, w0v, 1.0, flow)
    u_lim = step_to(op_limit, f, w0v, 1.0, flow)
    return energy_norm(op_eps, u_eps.values - u_lim.values)


def trajectory_csv(op, f, u0, t_stop, flow, stride=10) -> str:
    """Snapshot dump of one trajectory: rows "t,v0,...,vN" every stride steps.

    The final state is always included even when the step count is not a
    multiple of stride.
    """
    rows = []

    def observer(t, coeffs):
        rows.append((t, op.embed(coeffs)))

    coeffs, t_end = integrate(op, f, u0, t_stop, flow, observer=observer)
    kept = rows[::stride]
    if rows and kept[-1][0] != rows[-1][0]:
        kept.append(rows[-1])
    lines = [",".join([f"{t:.12g}"] + [f"{v:.12g}" for v in nodal])
             for t, nodal in kept]
    return "\n".join(lines) + "\n"


def expm_oracle(op, u0, t, guard=512):
    """Dense linear-flow oracle e^{-tA} u0 via the symmetric eigensolver.

    Equivalent to the matrix exponential of the M-symmetrized generator;
    guarded to small systems because it is cubic in the dimension.
    """
    A, M = op.system()
    dim = A.shape[0]
    if dim > guard:
        raise DenseCostGuardError(f"expm oracle limited to dim <= {guard}, got {dim}")
    vals = u0.values if isinstance(u0, GridFunction) else np.asarray(u0, float)
    coeffs = op.restrict_values(vals)
    w, V = sla.eigh(A.toarray(), M.toarray())
    a = V.T @ (M @ coeffs)
    out = V @ (np.exp(-w * t) * a)
    space = "constrained" if op.kind == "limit" else "full"
    return GridFunction(op.mesh, op.embed(out), space)
