import json

import numpy as np
import pytest

from locdiff import (
    Coefficient,
    Nonlinearity,
    ProblemConfig,
    check_admissible,
    default_config,
    load_config,
    make_profile,
    p_dist,
    tau,
    tau_log,
)
from locdiff.errors import AdmissibilityError, ConfigError
from locdiff.model import omega1_grid, require_admissible


# --- coefficient mini-language ---------------------------------------------

def test_coefficient_const():
    c = Coefficient("const:2.5")
    assert c(0.0) == 2.5
    assert np.all(c(np.linspace(0, 1, 5)) == 2.5)


def test_coefficient_poly():
    c = Coefficient("poly:[1, -2, 3]")
    x = np.array([0.0, 0.5, 1.0])
    assert c(x) == pytest.approx(1 - 2 * x + 3 * x**2)


def test_coefficient_from_number_and_callable():
    assert Coefficient(4)(0.3) == 4.0
    c = Coefficient(lambda x: np.sin(x))
    assert c.spec == "custom"
    assert c(np.pi / 2) == pytest.approx(1.0)


@pytest.mark.parametrize("bad", ["const:abc", "poly:{oops}", "poly:3", "gauss:1", "poly:[]"])
def test_coefficient_bad_specs(bad):
    with pytest.raises(ConfigError):
        Coefficient(bad)


def test_coefficient_bad_type():
    with pytest.raises(ConfigError):
        Coefficient([1, 2])


# --- nonlinearity ------------------------------------------------------------

def test_cubic_untouched_inside_half_cutoff():
    f = Nonlinearity("cubic", (1.0, 1.0), cutoff_K=4.0)
    u = np.linspace(-2.0, 2.0, 9)
    assert f(u) == pytest.approx(u - u**3)
    assert f.d(u) == pytest.approx(1 - 3 * u**2)


def test_cutoff_bounds_f_globally():
    f = Nonlinearity("cubic", (1.0, 1.0), cutoff_K=4.0)
    u = np.linspace(-50, 50, 2001)
    assert np.max(np.abs(f(u))) <= f.sup_bound() + 1e-12
    # saturation: the effective argument never leaves [-K, K]
    assert np.max(np.abs(f(u))) <= np.max(np.abs(f.raw(np.linspace(-4, 4, 2001)))) + 1e-9


def test_cutoff_is_c1():
    f = Nonlinearity("cubic", (1.0, 1.0), cutoff_K=4.0)
    h = 1e-6
    for u0 in (-3.7, -2.0, -0.3, 1.999999, 2.000001, 3.1):
        fd = (f(u0 + h) - f(u0 - h)) / (2 * h)
        assert fd == pytest.approx(f.d(u0), rel=1e-4, abs=1e-6)


def test_tanh_family():
    f = Nonlinearity("tanh", (2.0, 0.5))
    assert f.raw(0.7) == pytest.approx(2 * np.tanh(0.7) - 0.35)
    assert f.lipschitz_bound() >= 1.5 - 1e-12


def test_custom_family_requires_both_callables():
    with pytest.raises(ConfigError):
        Nonlinearity("custom", custom_f=lambda u: u)
    f = Nonlinearity("custom", custom_f=lambda u: 0 * u, custom_df=lambda u: 0 * u)
    assert f(1.3) == 0.0


def test_bad_nonlinearity_params():
    with pytest.raises(ConfigError):
        Nonlinearity("quintic")
    with pytest.raises(ConfigError):
        Nonlinearity("cubic", cutoff_K=0.0)


# --- problem config -----------------------------------------------------------

def test_default_config_reaction():
    cfg = default_config()
    assert cfg.reaction(0.0) == pytest.approx(0.3)
    assert cfg.reaction(1.0) == pytest.approx(0.7)
    assert cfg.c_omega0() == pytest.approx(0.0, abs=1e-12)


@pytest.mark.parametrize("kwargs", [
    {"x1": 0.7, "x2": 0.3},
    {"x1": 0.0},
    {"m0": 0.0},
    {"eps0": 1.5},
])
def test_config_validation(kwargs):
    with pytest.raises(ConfigError):
        ProblemConfig(**kwargs)


# --- diffusion profiles --------------------------------------------------------

def test_ramp_profile_shape():
    cfg = default_config()
    prof = make_profile(cfg, 0.1)
    assert prof(0.05) == pytest.approx(1.0)
    assert prof(0.3) == pytest.approx(1.0)          # ramp starts at x1
    assert prof(0.5) == pytest.approx(10.0)          # core floor 1/eps
    assert prof(0.35) == pytest.approx((1.0 + 10.0) / 2)  # linear mid-collar
    assert prof(0.95) == pytest.approx(1.0)


def test_smooth_ramp_is_flat_at_junctions():
    cfg = default_config()
    prof = make_profile(cfg, 0.1, kind="smooth-ramp")
    assert prof(0.3) == pytest.approx(1.0)
    assert prof(0.4) == pytest.approx(10.0)
    h = 1e-7
    # C^1 blending: one-sided slopes vanish where the layer meets Omega_1,
    # in contrast to the plain ramp whose slope there is (1/eps - 1)/eps
    assert abs(prof(0.3 + h) - prof(0.3)) / h < 1e-3
    assert abs(prof(0.4) - prof(0.4 - h)) / h < 1e-3
    ramp = make_profile(cfg, 0.1)
    assert (ramp(0.3 + h) - ramp(0.3)) / h == pytest.approx(90.0, rel=1e-3)


def test_offset_ramp_moves_omega1():
    cfg = default_config()
    prof = make_profile(cfg, 0.04, kind="offset-ramp")
    assert prof(0.1) == pytest.approx(1.0 + 0.04**0.5)
    assert p_dist(prof) == pytest.approx(0.04**0.5)


def test_custom_table_profile():
    cfg = default_config()
    prof = make_profile(cfg, 0.05, kind="custom-table",
                        table=[[0.0, 1.0], [0.5, 3.0], [1.0, 1.0]])
    assert prof(0.25) == pytest.approx(2.0)
    with pytest.raises(ConfigError):
        make_profile(cfg, 0.05, kind="custom-table")  # table missing
    with pytest.raises(ConfigError):
        make_profile(cfg, 0.05, kind="custom-table", table=[[0.0, 1.0]])
    with pytest.raises(ConfigError):
        make_profile(cfg, 0.05, kind="custom-table",
                     table=[[0.5, 1.0], [0.1, 2.0]])


def test_unknown_profile_kind():
    with pytest.raises(ConfigError):
        make_profile(default_config(), 0.05, kind="plateau")


@pytest.mark.parametrize("eps", [0.0, -0.1, 0.25, 0.2])
def test_profile_eps_bounds(eps):
    # eps0 = 0.2 and the partition needs eps < min(x1, 1-x2, (x2-x1)/2) = 0.2
    with pytest.raises(ConfigError):
        make_profile(default_config(), eps)


def test_breakpoints_and_core():
    prof = make_profile(default_config(), 0.05)
    bps = prof.breakpoints()
    for x in (0.25, 0.3, 0.35, 0.65, 0.7, 0.75):
        assert any(abs(b - x) < 1e-15 for b in bps)
    assert prof.core() == (pytest.approx(0.35), pytest.approx(0.65))


def test_tau_definitions():
    prof = make_profile(default_config(), 0.01)
    assert p_dist(prof) == 0.0          # ramp leaves Omega_1 untouched
    assert tau(prof) == pytest.approx(0.1)
    t = tau(prof)
    assert tau_log(prof) == pytest.approx(t * abs(np.log(t)))


def test_tau_log_saturates_at_one():
    cfg = default_config()
    prof = make_profile(cfg, 0.05, kind="custom-table",
                        table=[[0.0, 3.0], [1.0, 3.0]])
    assert p_dist(prof) == pytest.approx(2.0)
    assert tau(prof) > 1.0
    assert tau_log(prof) == pytest.approx(tau(prof))


def test_inverse_sqrt_integral():
    cfg = default_config()
    flat = make_profile(cfg, 0.05, kind="custom-table", table=[[0.0, 1.0], [1.0, 1.0]])
    assert flat.inverse_sqrt_integral() == pytest.approx(1.0, rel=1e-9)
    four = make_profile(cfg, 0.05, kind="custom-table", table=[[0.0, 4.0], [1.0, 4.0]])
    assert four.inverse_sqrt_integral() == pytest.approx(0.5, rel=1e-9)


# --- admissibility --------------------------------------------------------------

def test_default_is_admissible():
    cfg = default_config()
    assert check_admissible(make_profile(cfg, 0.05), cfg) == []


def test_reaction_below_floor_detected():
    cfg = ProblemConfig(lam=0.2, c=Coefficient(0.0))
    violations = check_admissible(make_profile(cfg, 0.05), cfg)
    assert any("m0" in str(v) for v in violations)
    with pytest.raises(AdmissibilityError):
        require_admissible(make_profile(cfg, 0.05), cfg)


def test_nondissipative_f_detected():
    cfg = ProblemConfig(f=Nonlinearity("cubic", (5.0, 0.01)))
    violations = check_admissible(make_profile(cfg, 0.05), cfg)
    assert sum("f(s)/s" in str(v) for v in violations) == 2


# --- json config loading ----------------------------------------------------------

def test_load_config_roundtrip(tmp_path):
    data = {
        "lambda": 0.8,
        "c": "poly:[0, 1]",
        "x1": 0.25,
        "x2": 0.75,
        "f": {"family": "cubic", "params": [1.0, 2.0]},
        "profile": {"kind": "smooth-ramp", "p0": "const:1.5"},
    }
    for source in (data, json.dumps(data)):
        cfg = load_config(source)
        assert cfg.lam == 0.8
        assert cfg.c(1.0) == pytest.approx(1.0)
        assert cfg.profile_kind == "smooth-ramp"
        assert cfg.f.params == (1.0, 2.0)
    path = tmp_path / "cfg.json"
    path.write_text(json.dumps(data))
    assert load_config(str(path)).x1 == 0.25


def test_load_config_rejects_unknown_keys():
    with pytest.raises(ConfigError, match="unknown config keys"):
        load_config({"lambda": 0.5, "diffusivity": 3})


@pytest.mark.parametrize("source", [
    "{not json",
    "[1, 2]",
    {"f": 3},
    {"profile": "ramp"},
    {"x1": "wide"},
])
def test_load_config_malformed(source):
    with pytest.raises(ConfigError):
        load_config(source)


def test_omega1_grid_avoids_core():
    xs = omega1_grid(0.3, 0.7)
    assert np.all((xs <= 0.3 + 1e-15) | (xs >= 0.7 - 1e-15))
    assert xs.min() == 0.0 and xs.max() == 1.0
