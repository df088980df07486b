"""Attractor clouds: heteroclinic shooting, Hausdorff distances in the
energy norm, and the structural checks guarding a sweep."""

from collections import Counter
from dataclasses import replace

import numpy as np
import pytest

from locdiff import (
    Coefficient,
    FlowConfig,
    ProblemConfig,
    build_pair,
    energy_norm,
    integrate,
    make_profile,
)
from locdiff.attractor import (
    AttractorSample,
    check_same_structure,
    directed_distance,
    hausdorff,
    sample_attractor,
)
from locdiff.equilibria import continue_to_eps, find_all_limit, matching_radius
from locdiff.errors import ContractViolation, StructuralChangeError

ROOT_HALF = np.sqrt(0.5)


@pytest.fixture(scope="module")
def const_attractor(cfg_const):
    """The pitchfork cloud: 0 connects to +-sqrt(1/2) by two heteroclinics."""
    profile = make_profile(cfg_const, 0.05)
    op_eps, op_lim = build_pair(cfg_const, profile, 128)
    eqs0 = find_all_limit(op_lim, cfg_const.f)
    delta = matching_radius(eqs0, op_lim)
    eqs = [continue_to_eps(e, op_eps, cfg_const.f, delta)[0] for e in eqs0]
    cloud = sample_attractor(op_eps, cfg_const.f, eqs)
    return op_eps, op_lim, eqs, cloud


# ---- cloud composition ----

def test_cloud_composition_and_tags(const_attractor):
    op_eps, _, eqs, cloud = const_attractor
    # 3 equilibria plus one unstable mode shot in both directions
    assert cloud.points.shape == (3 + 2 * 200, op_eps.mesh.n_nodes)
    counts = Counter(p.split(":")[0] for p in cloud.provenance)
    assert counts == {"equilibrium": 3, "heteroclinic": 400}
    tags = {p for p in cloud.provenance if p.startswith("heteroclinic")}
    assert tags == {"heteroclinic:u~+0.0000:mode0:+",
                    "heteroclinic:u~+0.0000:mode0:-"}
    assert cloud.eps == op_eps.eps
    assert cloud.mesh_n == op_eps.mesh.n_elements


def test_cloud_stays_in_the_dissipative_ball(const_attractor, cfg_const):
    _, _, _, cloud = const_attractor
    sup = np.max(np.abs(cloud.points))
    assert sup <= cfg_const.f.cutoff_K
    # the flow is monotone between 0 and the stable roots, so nothing
    # overshoots them either
    assert sup <= ROOT_HALF + 1e-6


def test_branches_run_from_the_saddle_to_the_stable_roots(const_attractor):
    op_eps, _, _, cloud = const_attractor
    for sign, root in ((":+", ROOT_HALF), (":-", -ROOT_HALF)):
        idx = [i for i, p in enumerate(cloud.provenance) if p.endswith(sign)]
        start = cloud.points[idx[0]]
        end = cloud.points[idx[-1]]
        assert energy_norm(op_eps, start) <= 1e-3  # delta_launch off zero
        assert energy_norm(op_eps, end - root) <= 2e-5  # conv_tol landing


def test_cloud_is_forward_invariant(const_attractor, cfg_const):
    op_eps, _, _, cloud = const_attractor
    worst = 0.0
    for i in range(0, cloud.points.shape[0], 60):
        coeffs, _ = integrate(op_eps, cfg_const.f, cloud.points[i], 1.0,
                              FlowConfig(dt=2e-3))
        moved = op_eps.embed(coeffs)[None, :]
        worst = max(worst, directed_distance(moved, cloud, op_eps))
    assert worst <= 2e-2  # measured 7.4e-4


def test_snapshot_density_refinement_is_stable(const_attractor, cfg_const):
    op_eps, _, eqs, cloud = const_attractor
    denser = sample_attractor(op_eps, cfg_const.f, eqs, points_per_branch=400)
    assert hausdorff(cloud, denser, op_eps) < 5e-3  # measured 1.9e-3


def test_single_stable_equilibrium_cloud_is_one_point():
    # dominant linear damping: the only rest point is 0 and it is stable,
    # so the attractor degenerates to that point
    cfg = ProblemConfig(lam=2.0, c=Coefficient(0.0))
    profile = make_profile(cfg, 0.05)
    op_eps, op_lim = build_pair(cfg, profile, 128)
    eqs0 = find_all_limit(op_lim, cfg.f)
    eqs = [continue_to_eps(e, op_eps, cfg.f, matching_radius(eqs0, op_lim))[0]
           for e in eqs0]
    cloud = sample_attractor(op_eps, cfg.f, eqs)
    assert cloud.points.shape == (1, op_eps.mesh.n_nodes)
    # the mean is numerically +-0, so only the tag shape is stable
    assert len(cloud.provenance) == 1
    assert cloud.provenance[0].startswith("equilibrium:u~")
    zero = np.zeros((1, op_eps.mesh.n_nodes))
    assert hausdorff(cloud, zero, op_eps) <= 1e-7


# ---- distances ----

def test_hausdorff_of_identical_clouds_vanishes(const_attractor):
    # the pairwise distance expands the square, so "zero" sits at the
    # roundoff floor of the quadratic form, about 1e-8 here
    op_eps, _, _, cloud = const_attractor
    assert hausdorff(cloud, cloud, op_eps) <= 1e-7


def test_directed_distance_of_subset_vanishes(const_attractor):
    op_eps, _, _, cloud = const_attractor
    subset = cloud.points[::5]
    assert directed_distance(subset, cloud, op_eps) <= 1e-7
    assert directed_distance(cloud, subset, op_eps) > 1e-4


def test_two_point_clouds_hand_computation(const_attractor):
    op_eps, _, _, _ = const_attractor
    n = op_eps.mesh.n_nodes
    a = np.zeros((1, n))
    b = np.full((1, n), 0.3)
    expected = 2.0 * energy_norm(op_eps, b[0])
    assert hausdorff(a, b, op_eps) == pytest.approx(expected, rel=1e-12)


def test_sum_convention_triangle_inequality(const_attractor):
    op_eps, _, _, _ = const_attractor
    n = op_eps.mesh.n_nodes
    e1 = np.zeros(n)
    e1[n // 3] = 1.0
    A = np.zeros((1, n))
    B = np.vstack([np.full(n, 0.2), e1])
    C = np.full((1, n), 0.5)
    dAC = hausdorff(A, C, op_eps)
    assert dAC <= hausdorff(A, B, op_eps) + hausdorff(B, C, op_eps) + 1e-12


def test_mesh_mismatch_is_rejected(const_attractor):
    op_eps, _, _, cloud = const_attractor
    other = np.zeros((2, cloud.points.shape[1] + 5))
    with pytest.raises(ContractViolation, match="meshes"):
        directed_distance(cloud, other, op_eps)


# ---- sweep structure checks ----

def test_same_structure_passes_on_matching_sets(const_attractor):
    _, _, eqs, _ = const_attractor
    check_same_structure(eqs, list(eqs))


def test_structure_change_on_count_mismatch(const_attractor):
    _, _, eqs, _ = const_attractor
    with pytest.raises(StructuralChangeError, match="count"):
        check_same_structure(eqs, eqs[:2])


def test_structure_change_on_morse_mismatch(const_attractor):
    _, _, eqs, _ = const_attractor
    bumped = [replace(eqs[0], morse_index=3)] + list(eqs[1:])
    with pytest.raises(StructuralChangeError, match="Morse"):
        check_same_structure(eqs, bumped)
