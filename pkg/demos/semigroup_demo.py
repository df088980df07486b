"""Time-one map of the reaction-diffusion flow versus its shadow limit.

The distance between the two flows after one time unit is bounded by a
constant times tau |log tau|, uniformly over bounded sets of constrained
initial data.  A slope fit cannot separate tau |log tau| from tau over two
decades, so the check is the one that can fail: the measured ratio
value / (tau |log tau|) has to stay inside a fixed band across the sweep.

The plain ramp is too kind for this (its p_dist term vanishes identically),
so the sweep runs on the offset family, which keeps both terms of tau alive.
"""

from dataclasses import replace

import numpy as np

from locdiff import (FlowConfig, GridFunction, build_pair, default_config,
                     eigenpairs, make_profile, step_to, tau_log, time_one_diff)

cfg = replace(default_config(), alpha=0.2)
n = 128
flow = FlowConfig(dt=2e-3)

# two constrained probes: a constant, and the first nontrivial limit mode
profile = make_profile(cfg, 0.1, kind="offset-ramp")
_, op_ref = build_pair(cfg, profile, n)
mode = eigenpairs(op_ref, 2)[1].vector.values

print(f"{'eps':>10} {'tau|log tau|':>13} {'diff (const)':>13} "
      f"{'diff (mode)':>12} {'ratio':>8}")
ratios = []
for eps in (1e-1, 1e-2, 1e-3):
    profile = make_profile(cfg, eps, kind="offset-ramp")
    op_eps, op_lim = build_pair(cfg, profile, n)
    scale = tau_log(profile)
    w_const = GridFunction(op_lim.mesh, np.full(op_lim.mesh.n_nodes, 0.4),
                           "constrained")
    nodal = np.interp(op_lim.mesh.nodes, op_ref.mesh.nodes, mode)
    w_mode = GridFunction(op_lim.mesh, 0.5 * nodal, "constrained")
    d1 = time_one_diff(op_eps, op_lim, cfg.f, w_const, flow)
    d2 = time_one_diff(op_eps, op_lim, cfg.f, w_mode, flow)
    ratios.append(max(d1, d2) / scale)
    print(f"{eps:10.1e} {scale:13.3e} {d1:13.3e} {d2:12.3e} "
          f"{ratios[-1]:8.3f}")

print(f"\nratio spread over the sweep: {max(ratios) / min(ratios):.2f} "
      "(bounded-constant check wants <= 10)")

# the flow itself is dissipative: a start at the cutoff bound collapses
# into the absorbing range within one time unit, then creeps toward the
# nearest attracting state
profile = make_profile(cfg, 0.01, kind="offset-ramp")
op_eps, _ = build_pair(cfg, profile, n)
u0 = cfg.f.cutoff_K * np.cos(2 * np.pi * op_eps.mesh.nodes)
sups = [np.abs(u0).max()]
state = u0
for _ in range(5):
    state = step_to(op_eps, cfg.f, state, 1.0, flow).values
    sups.append(np.abs(state).max())
print("\nsup |u(t)| from a start at the cutoff bound:",
      " ".join(f"{s:.3f}" for s in sups))
