"""Rate check for the stationary problem.

Sweeps eps over two decades, measures the energy-norm distance between the
perturbed solution and the constrained limit solution for a fixed load, and
fits log(value) against log(tau).  The proved bound is C tau, so the fitted
slope should come out at or above 1 (0.85 after leaving room for the fit
itself).  The resolvent difference in operator norm obeys the same bound and
is checked alongside.
"""

from locdiff import (RateRow, build_pair, default_config, fit_rate,
                     make_profile, p_dist, shifted_diff_norm, solution_diff,
                     solution_op_diff_norm, standard_loads, tau, tau_log)

cfg = default_config()
n = 512
eps_list = (1e-1, 10**-1.5, 1e-2, 10**-2.5, 1e-3)

rows = []
print(f"{'eps':>10} {'tau':>10} {'solution':>12} {'op norm':>12} {'mu=10':>12}")
for eps in eps_list:
    profile = make_profile(cfg, eps)
    op_eps, op_lim = build_pair(cfg, profile, n)
    g = standard_loads(op_lim)["cos1"]
    vals = {
        "solution_diff": solution_diff(op_eps, op_lim, g),
        "op_diff_norm": solution_op_diff_norm(op_eps, op_lim),
        "shifted_mu10": shifted_diff_norm(op_eps, op_lim, 10.0),
    }
    scales = (tau(profile), tau_log(profile), p_dist(profile))
    for q, v in vals.items():
        rows.append(RateRow(eps, *scales, q, v, n))
    print(f"{eps:10.1e} {scales[0]:10.3e} {vals['solution_diff']:12.3e} "
          f"{vals['op_diff_norm']:12.3e} {vals['shifted_mu10']:12.3e}")

print()
for q in ("solution_diff", "op_diff_norm", "shifted_mu10"):
    fit = fit_rate(rows, model="tau", quantity=q)
    print(f"{q:15s} slope {fit.slope:6.3f}  (r^2 = {fit.r2:.4f})")
