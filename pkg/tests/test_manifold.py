"""Slow-manifold graphs: the spectral split, the fixed-point iteration and
its certificates, graph comparison across operators, and the guard rails."""

import numpy as np
import pytest
import scipy.sparse as sp_

from locdiff import (
    Coefficient,
    FlowConfig,
    Nonlinearity,
    ProblemConfig,
    build_pair,
    default_config,
    energy_norm,
    integrate,
    make_profile,
)
from locdiff.errors import (
    AlignmentError,
    BoxEscapeError,
    ContractViolation,
    CutSelectionError,
    NoContractionError,
)
from locdiff.manifold import (
    GraphFunction,
    GraphResult,
    LPConfig,
    SpectralSplit,
    cloud_graph_distance,
    compute_graph,
    graph_diff,
    invariance_residual,
    lp_iterate,
    split,
    suggest_box,
)

from conftest import classic_operator

ZERO_REACTION = Nonlinearity("custom",
                             custom_f=lambda u: 0.0 * u,
                             custom_df=lambda u: 0.0 * u)


@pytest.fixture(scope="module")
def classic_split():
    """Constant-coefficient operator, slow space = the constant mode."""
    op = classic_operator(n=128, lam=0.5)
    return op, split(op, 1)


@pytest.fixture(scope="module")
def graph_pair(cfg):
    """Converged graphs for the perturbed/limit pair at eps=0.1, n=64.

    The nonconstant reaction coefficient bends the slow mode away from the
    constants, so the cubic produces a genuinely curved graph here.
    """
    profile = make_profile(cfg, 0.1)
    op_eps, op_lim = build_pair(cfg, profile, 64)
    sp_e, sp_l = split(op_eps, 1), split(op_lim, 1)
    lp = LPConfig(m=1, grid_res=9, rho_box=1.5, escape_factor=8.0)
    res_e = compute_graph(sp_e, cfg.f, lp)
    res_l = compute_graph(sp_l, cfg.f, lp)
    return op_eps, op_lim, sp_e, sp_l, res_e, res_l, lp


# ---- the spectral split ----

def test_split_constant_coefficients_scalar_slow_generator(classic_split):
    op, sp = classic_split
    assert sp.beta == pytest.approx(0.5, abs=1e-6)
    assert sp.gamma == pytest.approx(0.5 + np.pi**2, rel=1e-3)
    assert np.all(np.diff(sp.values) > 0)


def test_split_modes_orthonormal_and_complete(classic_split, rng):
    op, sp = classic_split
    gram = sp.modes.T @ (op.Mm @ sp.modes)
    assert np.max(np.abs(gram - np.eye(gram.shape[0]))) <= 1e-8
    u = rng.normal(size=op.mesh.n_nodes)
    # slow part plus fast part reassembles u, and the parts are Mm-orthogonal
    assert np.allclose(sp.slow @ sp.slow_coords(u) + sp.fast_part(u), u,
                       atol=1e-8)
    assert np.max(np.abs(sp.slow.T @ (op.Mm @ sp.fast_part(u)))) <= 1e-10


def test_split_gap_ratio_largest_at_first_cut(classic_split):
    # lam + k^2 pi^2 spacing: gamma/beta is ~20.7, 3.9, 2.2 for m = 1, 2, 3
    op, _ = classic_split
    ratios = [split(op, m).gamma / split(op, m).beta for m in (1, 2, 3)]
    assert all(r > 1.0 for r in ratios)
    assert ratios[0] > ratios[1] > ratios[2]
    assert ratios[0] > 20.0


def test_split_rejects_cut_outside_range(classic_split):
    op, _ = classic_split
    with pytest.raises(ContractViolation, match="cut"):
        split(op, 0)
    with pytest.raises(ContractViolation, match="cut"):
        split(op, op.mesh.n_nodes)


class _DiagOperator:
    """Minimal stand-in with a prescribed spectrum, for the gap guard."""

    def __init__(self, values):
        self._A = sp_.diags(np.asarray(values, float)).tocsr()
        self._M = sp_.eye(len(values), format="csr")
        self.Mm = self._M

    def system(self):
        return self._A, self._M

    def embed(self, coeffs):
        return np.asarray(coeffs, float)


def test_split_near_degenerate_gap_raises_cut_selection():
    op = _DiagOperator([1.0, 1.0 + 1e-12, 2.0, 3.0])
    with pytest.raises(CutSelectionError) as err:
        split(op, 1)
    assert err.value.m == 1
    assert err.value.gaps[0] <= 1e-8


# ---- graph container ----

def test_graph_function_multilinear_interpolation():
    axis = np.linspace(-1.0, 1.0, 3)
    e = np.array([1.0, -2.0, 0.5])
    g1 = GraphFunction([axis], np.outer(axis, e))
    assert np.allclose(g1.eval(0.5), 0.5 * e, atol=1e-14)
    g2 = GraphFunction([axis, axis],
                       (axis[:, None] + 2.0 * axis[None, :])[..., None] * e)
    assert np.allclose(g2.eval([0.25, -0.5]), (0.25 - 1.0) * e, atol=1e-14)


def test_graph_function_clamps_beyond_the_box():
    axis = np.linspace(-1.0, 1.0, 3)
    e = np.array([1.0, -2.0, 0.5])
    g = GraphFunction([axis], np.outer(axis, e))
    assert np.allclose(g.eval(7.0), e, atol=1e-14)
    assert np.allclose(g.eval(-7.0), -e, atol=1e-14)


def test_graph_function_shape_contract():
    axis = np.linspace(-1.0, 1.0, 3)
    with pytest.raises(ContractViolation, match="axes"):
        GraphFunction([axis], np.zeros((4, 5)))


def test_graph_function_grid_points():
    axis = np.linspace(-1.0, 1.0, 3)
    pts = GraphFunction([axis, axis], np.zeros((3, 3, 2))).grid_points()
    assert pts.shape == (9, 2)
    assert pts.min() == -1.0 and pts.max() == 1.0


# ---- trivial fixed points ----

def test_zero_reaction_gives_zero_graph_in_one_sweep(classic_split):
    op, sp = classic_split
    res = compute_graph(sp, ZERO_REACTION, LPConfig(m=1, grid_res=9, rho_box=1.0))
    assert res.converged and res.iterations == 1
    assert res.kappa == 0.0
    assert np.all(res.graph.values == 0.0)


def test_linear_reaction_keeps_zero_graph(classic_split):
    # a pointwise-linear reaction maps the slow mode into itself, so the
    # fast load vanishes and the iteration never leaves s = 0
    op, sp = classic_split
    f_lin = Nonlinearity("custom",
                         custom_f=lambda u: 0.3 * u,
                         custom_df=lambda u: 0.3 * np.ones_like(u))
    res = compute_graph(sp, f_lin, LPConfig(m=1, grid_res=9, rho_box=1.0))
    sup = max(energy_norm(op, res.graph.values[j]) for j in range(9))
    assert sup <= 1e-12


def test_cubic_over_constant_mode_stays_flat(classic_split, cfg_const):
    # with constant coefficients the slow mode is the constant function, and
    # the cubic of a constant is constant: the line of constants is flow
    # invariant, so the exact graph is identically zero
    op, sp = classic_split
    res = compute_graph(sp, cfg_const.f,
                        LPConfig(m=1, grid_res=9, rho_box=1.5, escape_factor=8.0))
    sup = max(energy_norm(op, res.graph.values[j]) for j in range(9))
    assert sup <= 1e-10


# ---- configuration guards ----

def test_compute_graph_requires_box(classic_split):
    _, sp = classic_split
    with pytest.raises(ContractViolation, match="rho_box"):
        compute_graph(sp, ZERO_REACTION, LPConfig(m=1))
    with pytest.raises(ContractViolation, match="positive"):
        compute_graph(sp, ZERO_REACTION, LPConfig(m=1, rho_box=-1.0))


# ---- converged graphs on the perturbed/limit pair ----

def test_contraction_certified(graph_pair):
    _, _, _, _, res_e, res_l, _ = graph_pair
    for res in (res_e, res_l):
        assert res.converged
        assert 0.0 < res.kappa < 0.6  # measured 0.29 / 0.23
        assert res.changes[-1] <= 1e-6
        assert res.iterations <= 40


def test_graph_values_are_fast_and_mildly_lipschitz(graph_pair):
    op_eps, _, sp_e, _, res_e, _, _ = graph_pair
    vals = res_e.graph.values
    worst = max(np.max(np.abs(sp_e.slow.T @ (op_eps.Mm @ vals[j])))
                for j in range(vals.shape[0]))
    assert worst <= 1e-9
    axis = res_e.graph.axes[0]
    lips = max(energy_norm(op_eps, vals[j + 1] - vals[j]) / (axis[j + 1] - axis[j])
               for j in range(len(axis) - 1))
    assert lips <= 1.0


def test_extra_sweep_after_convergence_barely_moves(graph_pair, cfg):
    op_eps, _, sp_e, _, res_e, _, lp = graph_pair
    new_vals, _ = lp_iterate(sp_e, cfg.f, res_e.graph, lp, res_e.t_horizon)
    move = max(energy_norm(op_eps, (new_vals - res_e.graph.values)[j])
               for j in range(new_vals.shape[0]))
    assert move <= 2.0 * lp.tol


def test_graph_is_invariant_under_the_flow(graph_pair, cfg):
    _, _, _, _, res_e, _, _ = graph_pair
    coords = [np.array([a]) for a in (-1.0, -0.4, 0.3, 0.9)]
    resid = invariance_residual(res_e, cfg.f, FlowConfig(dt=1e-3), coords, t=0.5)
    assert resid <= 5e-3  # measured 1.5e-4


def test_generic_trajectory_attracted_at_the_fast_rate(graph_pair, cfg):
    # distance to the graph decays like e^{-gamma t} until it reaches the
    # graph's own accuracy floor; the fit must beat gamma - Lip(f)
    op_eps, _, sp_e, _, res_e, _, _ = graph_pair
    a0 = np.array([0.5])
    u0 = sp_e.slow @ a0 + res_e.graph.eval(a0) + 0.5 * sp_e.fast[:, 0]
    ts, ds, seen = [], [], [0.0]

    def watch(t, coeffs):
        vals = op_eps.embed(coeffs)
        seen[0] = max(seen[0], np.max(np.abs(vals)))
        if not ts or t - ts[-1] >= 0.0199:
            ts.append(t)
            ds.append(cloud_graph_distance(res_e, op_eps, vals))

    integrate(op_eps, cfg.f, u0, 1.2, FlowConfig(dt=2e-3), observer=watch)
    ts, ds = np.array(ts), np.array(ds)
    mask = ds > 1e-3
    rate = -np.polyfit(ts[mask], np.log(ds[mask]), 1)[0]
    grid = np.linspace(-seen[0], seen[0], 2001)
    lip_seen = np.max(np.abs(cfg.f.d(grid)))
    assert rate > 0
    assert rate >= sp_e.gamma - lip_seen  # measured 21.5 vs 17.8


# ---- graph comparison ----

def test_graph_diff_report_shape(graph_pair):
    op_eps, _, _, _, res_e, res_l, _ = graph_pair
    d = graph_diff(res_e, res_l, op_eps)
    assert set(d) == {"sup", "pointwise", "radius"}
    assert d["radius"] == pytest.approx(1.2)  # 0.8 x the shared box
    assert d["sup"] > 0
    assert all(dist <= d["sup"] for _, dist in d["pointwise"])
    assert max(dist for _, dist in d["pointwise"]) == d["sup"]


def test_graph_diff_of_identical_graphs_is_zero(graph_pair):
    _, op_lim, _, _, _, res_l, _ = graph_pair
    assert graph_diff(res_l, res_l, op_lim)["sup"] == 0.0


def test_graph_diff_shrinks_with_eps(graph_pair, cfg):
    op_eps, _, _, _, res_e, res_l, lp = graph_pair
    coarse = graph_diff(res_e, res_l, op_eps)["sup"]
    profile = make_profile(cfg, 0.02)
    op_e2, op_l2 = build_pair(cfg, profile, 64)
    fine = graph_diff(compute_graph(split(op_e2, 1), cfg.f, lp),
                      compute_graph(split(op_l2, 1), cfg.f, lp), op_e2)["sup"]
    assert fine < coarse  # measured 3.9e-4 vs 1.5e-3


def test_graph_diff_stable_under_grid_refinement(cfg):
    profile = make_profile(cfg, 0.05)
    op_e, op_l = build_pair(cfg, profile, 64)
    sp_e, sp_l = split(op_e, 1), split(op_l, 1)
    sups = []
    for res in (9, 17):
        lp = LPConfig(m=1, grid_res=res, rho_box=1.5, escape_factor=8.0)
        sups.append(graph_diff(compute_graph(sp_e, cfg.f, lp),
                               compute_graph(sp_l, cfg.f, lp), op_e)["sup"])
    assert abs(sups[1] - sups[0]) / sups[1] < 0.1  # measured 0.2%


def _bare_result(sp, m, n_nodes, rho=1.5):
    axes = [np.linspace(-rho, rho, 3) for _ in range(m)]
    shape = tuple(3 for _ in range(m)) + (n_nodes,)
    return GraphResult(GraphFunction(axes, np.zeros(shape)), sp,
                       0.0, [], 0, 1.0, True)


def test_graph_diff_rejects_dimension_mismatch(graph_pair):
    op_eps, _, _, _, _, res_l, _ = graph_pair
    sp2 = split(op_eps, 2)
    fake = _bare_result(sp2, 2, op_eps.mesh.n_nodes)
    with pytest.raises(ContractViolation, match="slow dimensions"):
        graph_diff(fake, res_l, op_eps)


def test_graph_diff_orthogonal_slow_spaces_raise_alignment_error(graph_pair):
    # swap the first two modes: the fake slow space is the true first fast
    # mode, Mm-orthogonal to the real one, so the overlap is singular
    op_eps, _, sp_e, _, res_e, _, _ = graph_pair
    order = np.arange(sp_e.modes.shape[1])
    order[[0, 1]] = order[[1, 0]]
    swapped = SpectralSplit(op_eps, 1, sp_e.values[order], sp_e.modes[:, order])
    fake = _bare_result(swapped, 1, op_eps.mesh.n_nodes)
    with pytest.raises(AlignmentError, match="overlap"):
        graph_diff(fake, res_e, op_eps)


def test_graph_diff_all_nodes_excluded_guard(graph_pair):
    op_eps, _, _, _, res_e, res_l, _ = graph_pair
    with pytest.raises(ContractViolation, match="excluded"):
        graph_diff(res_e, res_l, op_eps, radius_frac=-1.0)


# ---- failure modes of the iteration ----

def test_backward_escape_raises_box_escape_error(classic_split, cfg_const):
    # at the default leash the cubic's backward orbits from the box rim blow
    # through escape_factor x rho before the horizon ends
    _, sp = classic_split
    with pytest.raises(BoxEscapeError, match="rho_box"):
        compute_graph(sp, cfg_const.f, LPConfig(m=1, grid_res=9, rho_box=1.5))


def test_iteration_budget_exhaustion_raises_no_contraction(graph_pair, cfg):
    _, _, sp_e, _, _, _, _ = graph_pair
    lp = LPConfig(m=1, grid_res=9, rho_box=1.5, escape_factor=8.0,
                  tol=1e-14, max_iter=2)
    with pytest.raises(NoContractionError) as err:
        compute_graph(sp_e, cfg.f, lp)
    assert len(err.value.kappa_history) == 2


# ---- distances and box selection ----

def test_cloud_distance_zero_on_graph_and_exact_off_graph(graph_pair):
    op_eps, _, sp_e, _, res_e, _, _ = graph_pair
    axis = res_e.graph.axes[0]
    pts = np.array([sp_e.slow[:, 0] * a + res_e.graph.eval(np.array([a]))
                    for a in axis[::2]])
    assert cloud_graph_distance(res_e, op_eps, pts) <= 1e-10
    z = sp_e.fast[:, 0]
    shifted = pts[2] + 0.3 * z
    assert cloud_graph_distance(res_e, op_eps, shifted) == pytest.approx(
        0.3 * energy_norm(op_eps, z), rel=1e-9)


def test_suggest_box_covers_states_with_margin(classic_split):
    op, sp = classic_split
    states = [np.full(op.mesh.n_nodes, v) for v in (-np.sqrt(0.5), np.sqrt(0.5))]
    box = suggest_box(sp, states)
    assert box.shape == (1,)
    assert box[0] == pytest.approx(2.0 * np.sqrt(0.5), abs=1e-8)
    assert suggest_box(sp, [np.zeros(op.mesh.n_nodes)])[0] == 0.25
