"""Log-log rate fits and their CSV/JSON artifacts.

Every experiment reduces to rows (eps, tau, tau_log, p_dist, quantity,
value, mesh_n, dt) and a least-squares slope of log(value) against
log(tau) or log(tau * |log tau|).  Zero or non-finite values cannot be
fitted; they are excluded and reported, and fewer than four survivors is
a refusal, not a fit.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass

import numpy as np

from .errors import ContractViolation, FitRejectedError

CSV_HEADER = "eps,tau,tau_log,p_dist,quantity,value,mesh_n,dt"

__all__ = ["RateRow", "RateFit", "RateReport", "fit_rate", "CSV_HEADER"]


def _fmt(x):
    if x is None:
        return ""
    if isinstance(x, (int, np.integer)):
        return str(int(x))
    return format(float(x), ".12g")


@dataclass
class RateRow:
    eps: float
    tau: float
    tau_log: float
    p_dist: float
    quantity: str
    value: float
    mesh_n: int
    dt: float | None = None

    def abscissa(self, model):
        if model == "tau":
            return self.tau
        if model == "tau_log":
            return self.tau_log
        raise ContractViolation(f"unknown rate model {model!r}")

    def to_csv(self):
        return ",".join([
            _fmt(self.eps), _fmt(self.tau), _fmt(self.tau_log), _fmt(self.p_dist),
            self.quantity, _fmt(self.value), _fmt(self.mesh_n), _fmt(self.dt),
        ])


@dataclass
class RateFit:
    quantity: str
    model: str
    slope: float
    intercept: float
    r2: float
    n_rows: int

    def to_dict(self):
        return {
            "quantity": self.quantity,
            "model": self.model,
            "slope": round(self.slope, 12),
            "intercept": round(self.intercept, 12),
            "r2": round(self.r2, 12),
            "n_rows": self.n_rows,
        }


def fit_rate(rows, model="tau", quantity=None) -> RateFit:
    """Least-squares slope of log(value) vs log(abscissa) over usable rows."""
    rows = list(rows)
    if quantity is not None:
        rows = [r for r in rows if r.quantity == quantity]
    usable, excluded = [], []
    for r in rows:
        if r.value > 0 and math.isfinite(r.value) and r.abscissa(model) > 0:
            usable.append(r)
        else:
            excluded.append(r)
    if len(usable) < 4:
        raise FitRejectedError(
            f"need >= 4 positive rows to fit, have {len(usable)} "
            f"({len(excluded)} excluded)", excluded=excluded,
        )
    x = np.log(np.array([r.abscissa(model) for r in usable]))
    y = np.log(np.array([r.value for r in usable]))
    slope, intercept = np.polyfit(x, y, 1)
    resid = y - (slope * x + intercept)
    ss_tot = float(np.sum((y - y.mean()) ** 2))
    r2 = 1.0 - float(np.sum(resid**2)) / ss_tot if ss_tot > 0 else 1.0
    name = quantity or (usable[0].quantity if usable else "mixed")
    return RateFit(name, model, float(slope), float(intercept), r2, len(usable))


class RateReport:
    """Rows plus named fits, with deterministic CSV/JSON serialization."""

    def __init__(self):
        self.rows: list[RateRow] = []
        self.fits: dict[str, dict] = {}
        self.stats: dict[str, float] = {}

    def add_rows(self, rows):
        self.rows.extend(rows)

    def fit(self, quantity, model, key=None):
        f = fit_rate(self.rows, model=model, quantity=quantity)
        self.fits[key or quantity] = f.to_dict()
        return f

    def add_stat(self, name, value):
        self.stats[name] = float(value)

    def csv_text(self):
        lines = [CSV_HEADER]
        lines.extend(r.to_csv() for r in self.rows)
        return "\n".join(lines) + "\n"

    def write_csv(self, path):
        with open(path, "w", encoding="utf-8", newline="\n") as fh:
            fh.write(self.csv_text())

    def write_fits(self, path):
        payload = {"fits": self.fits, "stats": self.stats}
        with open(path, "w", encoding="utf-8", newline="\n") as fh:
            json.dump(payload, fh, indent=2, sort_keys=True)
            fh.write("\n")
