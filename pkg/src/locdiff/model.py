"""Problem data for the localized-large-diffusion family.

A problem instance on (0,1) is described by a reaction shift ``lambda``,
a reaction coefficient ``c(x)``, an interior interval (x1, x2) where the
diffusion blows up as eps -> 0, and a dissipative nonlinearity ``f``.
The diffusion coefficient itself is a one-parameter family p_eps built
by :func:`make_profile`; every rate in this package is measured against

    tau(eps) = (sup_{Omega_1} |p_eps - p_0| + eps)^(1/2),

where Omega_1 = [0, x1] u [x2, 1] is the complement of the large-diffusion
region.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field
from typing import Callable, Sequence

import numpy as np

from .errors import AdmissibilityError, ConfigError

GRID_POINTS = 10_000  # deterministic sampling resolution for sup/inf checks

__all__ = [
    "Coefficient",
    "Nonlinearity",
    "ProblemConfig",
    "DiffusionProfile",
    "Violation",
    "make_profile",
    "p_dist",
    "tau",
    "tau_log",
    "check_admissible",
    "load_config",
    "default_config",
    "omega1_grid",
]


class Coefficient:
    """Scalar coefficient on [0,1] parsed from the ``const:``/``poly:`` mini-language.

    ``const:<v>`` is the constant v; ``poly:[a0,a1,...]`` is a0 + a1*x + ...
    A plain callable is also accepted (spec string then reads ``custom``).
    """

    def __init__(self, spec: str | float | Callable[[np.ndarray], np.ndarray]):
        if callable(spec):
            self.spec = "custom"
            self._fn = spec
            self._coeffs = None
        elif isinstance(spec, (int, float)):
            self.spec = f"const:{float(spec)}"
            self._coeffs = np.array([float(spec)])
            self._fn = None
        elif isinstance(spec, str):
            self.spec = spec
            self._fn = None
            if spec.startswith("const:"):
                try:
                    self._coeffs = np.array([float(spec[len("const:"):])])
                except ValueError as exc:
                    raise ConfigError(f"bad constant coefficient {spec!r}") from exc
            elif spec.startswith("poly:"):
                try:
                    coeffs = json.loads(spec[len("poly:"):])
                    self._coeffs = np.asarray(coeffs, dtype=float)
                except (ValueError, TypeError) as exc:
                    raise ConfigError(f"bad polynomial coefficient {spec!r}") from exc
                if self._coeffs.ndim != 1 or self._coeffs.size == 0:
                    raise ConfigError(f"polynomial spec needs a flat list: {spec!r}")
            else:
                raise ConfigError(f"unknown coefficient spec {spec!r}")
        else:
            raise ConfigError(f"cannot interpret coefficient {spec!r}")

    def __call__(self, x):
        x = np.asarray(x, dtype=float)
        if self._fn is not None:
            return np.asarray(self._fn(x), dtype=float)
        # polynomial in the natural (ascending) order
        return np.polynomial.polynomial.polyval(x, self._coeffs)

    def __repr__(self):
        return f"Coefficient({self.spec!r})"


def _cutoff_map(u, half, full):
    """C^1 saturation: identity on [-half, half], asymptote at +-full."""
    u = np.asarray(u, dtype=float)
    a = np.abs(u)
    tail = full - (full - half) * np.exp(-(a - half) / (full - half))
    return np.where(a <= half, u, np.sign(u) * tail)


def _cutoff_slope(u, half, full):
    u = np.asarray(u, dtype=float)
    a = np.abs(u)
    return np.where(a <= half, 1.0, np.exp(-(a - half) / (full - half)))


@dataclass
class Nonlinearity:
    """Dissipative reaction term with a C^1 cutoff.

    ``family`` is one of ``cubic`` (a*u - b*u^3), ``tanh`` (a*tanh(u) - b*u)
    or ``custom`` (callables supplied directly).  The cutoff replaces f by
    f(chi(u)) where chi saturates at +-cutoff_K and is the identity on
    [-cutoff_K/2, cutoff_K/2], making f bounded and globally Lipschitz
    without touching it near the attractor.
    """

    family: str = "cubic"
    params: Sequence[float] = (1.0, 1.0)
    cutoff_K: float = 4.0
    custom_f: Callable | None = None
    custom_df: Callable | None = None

    def __post_init__(self):
        if self.cutoff_K <= 0:
            raise ConfigError("cutoff_K must be positive")
        if self.family not in ("cubic", "tanh", "custom"):
            raise ConfigError(f"unknown nonlinearity family {self.family!r}")
        if self.family == "custom" and (self.custom_f is None or self.custom_df is None):
            raise ConfigError("custom nonlinearity needs custom_f and custom_df")

    def raw(self, u):
        u = np.asarray(u, dtype=float)
        if self.family == "cubic":
            a, b = self.params
            return a * u - b * u**3
        if self.family == "tanh":
            a, b = self.params
            return a * np.tanh(u) - b * u
        return np.asarray(self.custom_f(u), dtype=float)

    def raw_d(self, u):
        u = np.asarray(u, dtype=float)
        if self.family == "cubic":
            a, b = self.params
            return a - 3.0 * b * u**2
        if self.family == "tanh":
            a, b = self.params
            return a / np.cosh(u) ** 2 - b
        return np.asarray(self.custom_df(u), dtype=float)

    def __call__(self, u):
        return self.raw(_cutoff_map(u, self.cutoff_K / 2, self.cutoff_K))

    def d(self, u):
        K = self.cutoff_K
        chi = _cutoff_map(u, K / 2, K)
        return self.raw_d(chi) * _cutoff_slope(u, K / 2, K)

    def lipschitz_bound(self):
        """max |f'| on a fine deterministic grid wide enough that the
        cutoff slope has decayed to a few percent at the edges."""
        grid = np.linspace(-2 * self.cutoff_K, 2 * self.cutoff_K, 8001)
        return float(np.max(np.abs(self.d(grid))))

    def sup_bound(self):
        # the cutoff maps R into (-K, K), so the global sup of the composite
        # is the max of the raw law on the closed interval
        grid = np.linspace(-self.cutoff_K, self.cutoff_K, 4001)
        return float(np.max(np.abs(self.raw(grid))))


@dataclass
class ProblemConfig:
    """Immutable description of one problem instance (diffusion family aside)."""

    lam: float = 0.5
    c: Coefficient = field(default_factory=lambda: Coefficient("poly:[-0.2, 0.4]"))
    m0: float = 0.3
    x1: float = 0.3
    x2: float = 0.7
    eps0: float = 0.2
    f: Nonlinearity = field(default_factory=Nonlinearity)
    profile_kind: str = "ramp"
    p0: Coefficient = field(default_factory=lambda: Coefficient("const:1"))
    alpha: float = 0.5
    profile_table: Sequence[Sequence[float]] | None = None

    def __post_init__(self):
        if not (0.0 < self.x1 < self.x2 < 1.0):
            raise ConfigError(f"need 0 < x1 < x2 < 1, got x1={self.x1}, x2={self.x2}")
        if self.m0 <= 0:
            raise ConfigError("m0 must be positive")
        if not (0.0 < self.eps0 < 1.0):
            raise ConfigError("eps0 must lie in (0,1)")

    def reaction(self, x):
        """lambda + c(x), the zeroth-order coefficient of the linear part."""
        return self.lam + self.c(x)

    def c_omega0(self) -> float:
        """Average of c over the large-diffusion interval (x1, x2).

        This is the coefficient the lumped scalar mode feels in the limit
        problem; computed by composite Simpson on the deterministic grid.
        """
        from scipy.integrate import simpson

        xs = np.linspace(self.x1, self.x2, GRID_POINTS + 1)
        return float(simpson(self.c(xs), x=xs) / (self.x2 - self.x1))

    def omega0_length(self) -> float:
        return self.x2 - self.x1


def omega1_grid(x1: float, x2: float, total: int = GRID_POINTS):
    """Deterministic grid on Omega_1 with points allocated by piece length."""
    left_len, right_len = x1, 1.0 - x2
    n_left = max(2, int(round(total * left_len / (left_len + right_len))))
    n_right = max(2, total - n_left)
    return np.concatenate([np.linspace(0.0, x1, n_left), np.linspace(x2, 1.0, n_right)])


class DiffusionProfile:
    """One member p_eps of the diffusion family.

    Evaluation is vectorized; ``kind`` selects how the large-diffusion core
    is attached to p0:

    * ``ramp``: p0 on Omega_1, linear ramp to 1/eps across [x1, x1+eps] and
      [x2-eps, x2], constant 1/eps on the core.
    * ``smooth-ramp``: same but blended with a C^1 smoothstep.
    * ``offset-ramp``: ramp plus eps^alpha added on Omega_1, so both terms
      of tau are exercised.
    * ``custom-table``: piecewise-linear interpolation of a breakpoint table.
    """

    KINDS = ("ramp", "smooth-ramp", "offset-ramp", "custom-table")

    def __init__(self, kind, eps, config, table=None):
        if kind not in self.KINDS:
            raise ConfigError(f"unknown profile kind {kind!r}")
        self.kind = kind
        self.eps = float(eps)
        self.config = config
        self.x1 = config.x1
        self.x2 = config.x2
        self.alpha = config.alpha
        self.core_floor = 1.0 / self.eps
        if kind == "custom-table":
            if table is None:
                raise ConfigError("custom-table profile needs a table")
            tab = np.asarray(table, dtype=float)
            if tab.ndim != 2 or tab.shape[1] != 2 or tab.shape[0] < 2:
                raise ConfigError("table must be a list of (x, p) pairs")
            if not np.all(np.diff(tab[:, 0]) > 0):
                raise ConfigError("table abscissae must be strictly increasing")
            self.table = tab
        else:
            self.table = None

    def p0_at(self, x):
        """Limit coefficient; meaningful on Omega_1, extended smoothly inside."""
        base = self.config.p0(np.asarray(x, dtype=float))
        if self.kind == "offset-ramp":
            return base + self.eps**self.alpha
        return base

    def __call__(self, x):
        x = np.asarray(x, dtype=float)
        scalar = x.ndim == 0
        x = np.atleast_1d(x)
        if self.kind == "custom-table":
            p = np.interp(x, self.table[:, 0], self.table[:, 1])
        else:
            eps, x1, x2 = self.eps, self.x1, self.x2
            big = self.core_floor
            p0v = self.p0_at(x)
            t_left = np.clip((x - x1) / eps, 0.0, 1.0)
            t_right = np.clip((x2 - x) / eps, 0.0, 1.0)
            t = np.minimum(t_left, t_right)  # 0 on Omega_1, 1 on the core
            if self.kind == "smooth-ramp":
                t = t * t * (3.0 - 2.0 * t)
            p = (1.0 - t) * p0v + t * big
        return float(p[0]) if scalar else p

    def breakpoints(self):
        """Abscissae where p_eps loses smoothness; all must become mesh nodes."""
        eps, x1, x2 = self.eps, self.x1, self.x2
        pts = [x1 - eps, x1, x1 + eps, x2 - eps, x2, x2 + eps]
        if self.table is not None:
            pts.extend(float(v) for v in self.table[:, 0] if 0.0 < v < 1.0)
        return sorted(set(pts))

    def core(self):
        return (self.x1 + self.eps, self.x2 - self.eps)

    def omega_eps(self):
        """The collar [x1-eps, x1] u [x2, x2+eps] used by the extension operator."""
        return ((self.x1 - self.eps, self.x1), (self.x2, self.x2 + self.eps))

    def inverse_sqrt_integral(self) -> float:
        """l = int_0^1 p_eps^{-1/2} dx, composite Simpson on the fine grid.

        High eigenvalues behave like (i*pi/l)^2, so this scale calibrates
        the gap model.
        """
        from scipy.integrate import simpson

        xs = np.linspace(0.0, 1.0, GRID_POINTS + 1)
        return float(simpson(1.0 / np.sqrt(self(xs)), x=xs))

    def __repr__(self):
        return f"DiffusionProfile({self.kind!r}, eps={self.eps})"


def make_profile(config: ProblemConfig, eps: float, kind: str | None = None,
                 table=None) -> DiffusionProfile:
    """Construct p_eps for one eps, validating the geometric preconditions."""
    kind = kind or config.profile_kind
    if not (0.0 < eps <= config.eps0):
        raise ConfigError(f"eps={eps} outside (0, eps0={config.eps0}]")
    limit = min(config.x1, 1.0 - config.x2, (config.x2 - config.x1) / 2)
    if eps >= limit:
        raise ConfigError(
            f"eps={eps} too large for the partition (needs eps < {limit:.4g})"
        )
    if table is None:
        table = config.profile_table
    return DiffusionProfile(kind, eps, config, table=table)


def p_dist(profile: DiffusionProfile) -> float:
    """sup over Omega_1 of |p_eps - p_0| on the deterministic grid."""
    xs = omega1_grid(profile.x1, profile.x2)
    return float(np.max(np.abs(profile(xs) - profile.config.p0(xs))))


def tau(profile: DiffusionProfile) -> float:
    """The convergence scale (p_dist + eps)^(1/2)."""
    return math.sqrt(p_dist(profile) + profile.eps)


def tau_log(profile: DiffusionProfile) -> float:
    """tau * |log tau| for tau < 1, else tau itself (callers flag that case)."""
    t = tau(profile)
    return t * abs(math.log(t)) if t < 1.0 else t


@dataclass
class Violation:
    """One failed admissibility inequality with its worst grid point."""

    constraint: str
    x: float | None
    value: float
    bound: float

    def __str__(self):
        where = "" if self.x is None else f" at x={self.x:.6g}"
        return f"{self.constraint}{where}: {self.value:.6g} vs bound {self.bound:.6g}"


def check_admissible(profile: DiffusionProfile, config: ProblemConfig):
    """All admissibility inequalities on the deterministic grid.

    Returns the (possibly empty) violation list; raising is the caller's
    choice so the CLI can report every failure at once.
    """
    out = []
    xs = np.linspace(0.0, 1.0, GRID_POINTS + 1)
    tol = 1e-9

    react = config.reaction(xs)
    i = int(np.argmin(react))
    if react[i] < config.m0 - tol:
        out.append(Violation("lambda + c(x) >= m0", float(xs[i]), float(react[i]), config.m0))

    pv = profile(xs)
    i = int(np.argmin(pv))
    if pv[i] < config.m0 - tol:
        out.append(Violation("p_eps(x) >= m0", float(xs[i]), float(pv[i]), config.m0))

    lo, hi = profile.core()
    core = xs[(xs >= lo) & (xs <= hi)]
    if core.size:
        pc = profile(core)
        i = int(np.argmin(pc))
        floor = profile.core_floor
        if pc[i] < floor * (1.0 - 1e-12) - tol:
            out.append(Violation("p_eps >= 1/eps on core", float(core[i]), float(pc[i]), floor))

    o1 = omega1_grid(config.x1, config.x2)
    p0v = config.p0(o1)
    i = int(np.argmin(p0v))
    if p0v[i] < config.m0 - tol:
        out.append(Violation("p0(x) >= m0 on Omega_1", float(o1[i]), float(p0v[i]), config.m0))

    K = config.f.cutoff_K
    for s in (K, -K):
        val = float(config.f.raw(s)) / s
        if val >= 0.0:
            out.append(Violation("f(s)/s < 0 at s=+-K", s, val, 0.0))

    return out


def require_admissible(profile, config):
    violations = check_admissible(profile, config)
    if violations:
        raise AdmissibilityError(violations)


def _coefficient_from_json(value):
    if isinstance(value, (int, float, str)):
        return Coefficient(value)
    raise ConfigError(f"coefficient must be a spec string or number, got {value!r}")


def load_config(source) -> ProblemConfig:
    """Build a ProblemConfig from a JSON file path, JSON text, or a dict."""
    if isinstance(source, dict):
        data = source
    else:
        text = None
        try:
            with open(source, "r", encoding="utf-8") as fh:
                text = fh.read()
        except (OSError, TypeError):
            if isinstance(source, str):
                text = source
            else:
                raise ConfigError(f"cannot read config from {source!r}")
        try:
            data = json.loads(text)
        except json.JSONDecodeError as exc:
            raise ConfigError(f"config is not valid JSON: {exc}") from exc
    if not isinstance(data, dict):
        raise ConfigError("config root must be a JSON object")

    known = {"lambda", "c", "m0", "x1", "x2", "eps0", "f", "profile", "run"}
    unknown = set(data) - known
    if unknown:
        raise ConfigError(f"unknown config keys: {sorted(unknown)}")

    f_data = data.get("f", {})
    if not isinstance(f_data, dict):
        raise ConfigError("'f' must be an object")
    nl = Nonlinearity(
        family=f_data.get("family", "cubic"),
        params=tuple(f_data.get("params", (1.0, 1.0))),
        cutoff_K=float(f_data.get("cutoff_K", 4.0)),
    )
    prof = data.get("profile", {})
    if not isinstance(prof, dict):
        raise ConfigError("'profile' must be an object")

    try:
        return ProblemConfig(
            lam=float(data.get("lambda", 0.5)),
            c=_coefficient_from_json(data.get("c", "poly:[-0.2, 0.4]")),
            m0=float(data.get("m0", 0.3)),
            x1=float(data.get("x1", 0.3)),
            x2=float(data.get("x2", 0.7)),
            eps0=float(data.get("eps0", 0.2)),
            f=nl,
            profile_kind=prof.get("kind", "ramp"),
            p0=_coefficient_from_json(prof.get("p0", "const:1")),
            alpha=float(prof.get("alpha", 0.5)),
            profile_table=prof.get("table"),
        )
    except (TypeError, ValueError) as exc:
        raise ConfigError(f"malformed config value: {exc}") from exc


def default_config() -> ProblemConfig:
    """The reference instance used by demos, tests and the CLI default."""
    return ProblemConfig()
