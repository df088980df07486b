"""Diffusion profiles and the convergence scale tau.

Every rate in this package is measured against
tau = (sup_{outside the core} |p_eps - p_0| + eps)^(1/2), so the choice of
profile family decides what a sweep can show.  The plain ramp agrees with
p_0 outside the core exactly (tau^2 = eps); the offset family keeps a
controlled mismatch eps^alpha alive there.
"""

import json

from locdiff import default_config, load_config, make_profile, p_dist, tau, tau_log

cfg = default_config()

print(f"{'eps':>8} {'kind':>12} {'p_dist':>10} {'tau':>10} {'tau|log tau|':>13}")
for kind in ("ramp", "smooth-ramp", "offset-ramp"):
    for eps in (1e-1, 1e-2, 1e-3):
        pr = make_profile(cfg, eps, kind=kind)
        print(f"{eps:8.0e} {kind:>12} {p_dist(pr):10.3e} {tau(pr):10.3e} "
              f"{tau_log(pr):13.3e}")

# the profile is a callable; the core value is what makes the problem stiff
pr = make_profile(cfg, 1e-3)
mid = 0.5 * (cfg.x1 + cfg.x2)
print(f"\nramp at eps = 1e-3: p({cfg.x1 - 0.1:.1f}) = {pr(cfg.x1 - 0.1):.3f}, "
      f"p({mid:.1f}) = {pr(mid):.1f}  (>= 1/eps on the core)")

# configurations round-trip through plain JSON; unknown keys are rejected
text = json.dumps({"lambda": 0.5, "c": "poly:[-0.2, 0.4]",
                   "f": {"family": "cubic", "cutoff_K": 4.0},
                   "m0": 0.3, "x1": 0.3, "x2": 0.7})
cfg2 = load_config(text)
print(f"\nparsed config: lam = {cfg2.lam}, c = {cfg2.c.spec!r}, "
      f"core = [{cfg2.x1}, {cfg2.x2}]")
