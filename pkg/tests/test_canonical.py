import math
import warnings

import numpy as np
import pytest

from trunckit.canonical import (
    CanonConfig,
    CanonStatus,
    CrossSection,
    DevelopmentOverflow,
    FaceKind,
    NotApplicable,
    admissible,
    canonize,
    classify,
    cross_section,
    develop_cusp,
    face_tilt_sum,
    geometric_three_two,
    geometric_two_three,
    horosphere_lifts,
    height_constant,
    initial_radii,
    tilt_report,
    verify_cross_section,
)
from trunckit.lorentz import EPS_TILT, lorentz_dot
from trunckit.solver import solve
from trunckit.tetshape import TetCombinatorics
from trunckit.triangulation import (
    Gluing,
    SelfAdjacentFace,
    Triangulation,
    inverse,
    isomorphism_signature,
)


def _cusp(tri):
    return next(vc.index for vc in tri.vertex_classes if vc.ideal)


def test_height_constant_value():
    assert height_constant(1.0, 0.5, 2.0) == pytest.approx(4 * math.sqrt(3), abs=1e-12)


def test_height_constant_needs_ordered_radii():
    with pytest.raises(ValueError):
        height_constant(0.5, 0.5, 1.0)


def test_classify_thresholds():
    assert classify(2 * EPS_TILT) is FaceKind.CONCAVE
    assert classify(-2 * EPS_TILT) is FaceKind.CONVEX
    assert classify(0.5 * EPS_TILT) is FaceKind.FLAT
    assert classify(-EPS_TILT) is FaceKind.FLAT


def test_all_ideal_development_not_applicable(figure_eight, solved):
    with pytest.raises(NotApplicable):
        develop_cusp(figure_eight, solved["figure_eight"], 0)


def test_development_rejects_finite_vertex(mixed, solved):
    finite = next(vc.index for vc in mixed.vertex_classes if not vc.ideal)
    with pytest.raises(ValueError):
        develop_cusp(mixed, solved["mixed"], finite)


def test_development_cap(mixed, solved):
    with pytest.raises(DevelopmentOverflow):
        develop_cusp(mixed, solved["mixed"], _cusp(mixed), cap=3)


def test_development_constants(mixed, solved):
    dv = develop_cusp(mixed, solved["mixed"], _cusp(mixed))
    assert dv.r1 > dv.r2 > 0
    assert dv.d > 0
    assert dv.r1_prime > dv.r2_prime
    # every member of the cusp sits once at infinity
    assert set(dv.top_copies) == set(mixed.vertex_classes[dv.cusp].members)
    for key, idx in dv.top_copies.items():
        assert dv.copies[idx].top == key[1]


def test_development_independent_of_start(mixed, solved):
    cusp = _cusp(mixed)
    devs = [develop_cusp(mixed, solved["mixed"], cusp, start=s)
            for s in mixed.vertex_classes[cusp].members]
    for dv in devs[1:]:
        assert dv.d == pytest.approx(devs[0].d, rel=1e-9)
        assert dv.r1 == pytest.approx(devs[0].r1, rel=1e-9)
        assert dv.r2 == pytest.approx(devs[0].r2, rel=1e-9)


def test_cross_section_heights(mixed, solved):
    cs = cross_section(mixed, solved["mixed"])
    cusp = _cusp(mixed)
    dv = cs.developments[cusp]
    k = height_constant(dv.r1, dv.r2, dv.d)
    # a single cusp: the scale factor is k / r1
    assert cs.heights[cusp] == pytest.approx(k * k / dv.r1, rel=1e-12)
    assert cs.heights[cusp] > max(dv.rho, dv.r1)
    assert all(r > 0 for r in cs.radii.values())
    assert set(cs.radii) == set(mixed.vertex_classes[cusp].members)


def test_cross_section_radii_scale_inversely(mixed, solved):
    theta = solved["mixed"]
    cs = cross_section(mixed, theta)
    cusp = _cusp(mixed)
    doubled = cross_section(mixed, theta, heights={cusp: 2 * cs.heights[cusp]})
    for key, r in cs.radii.items():
        assert doubled.radii[key] == pytest.approx(r / 2, rel=1e-12)
    scaled = cs.scaled(2.0)
    for key, r in doubled.radii.items():
        assert scaled.radii[key] == pytest.approx(r, rel=1e-12)


def test_no_cusps_gives_empty_cross_section(fujii, solved):
    cs = cross_section(fujii, solved["fujii"])
    assert cs.heights == {} and cs.radii == {}
    rep = verify_cross_section(fujii, solved["fujii"], cs)
    assert rep.ok and rep.pairs_checked == 0
    radii, _ = initial_radii(fujii, solved["fujii"])
    assert radii == {}


def test_verify_cross_section_passes(mixed, solved):
    theta = solved["mixed"]
    cs = cross_section(mixed, theta)
    rep = verify_cross_section(mixed, theta, cs)
    assert rep.pairs_checked > 0
    assert rep.ok
    assert "construction" in rep.second_condition


def _min_ratio(tri, theta, cs):
    cusp = next(iter(cs.developments))
    lifts, planes = horosphere_lifts(tri, theta, cs, cusp)
    near = [min(-lorentz_dot(u, w) for w in planes) for u in lifts]
    return min(-lorentz_dot(lifts[i], lifts[j]) / (near[i] + near[j])
               for i in range(len(lifts)) for j in range(i + 1, len(lifts)))


def test_verify_cross_section_margin_shrinks_with_height(mixed, solved):
    # lowering every height by 10 shrinks the slack of each checked pair
    theta = solved["mixed"]
    cs = cross_section(mixed, theta)
    full = verify_cross_section(mixed, theta, cs)
    low = verify_cross_section(mixed, theta, cs.scaled(0.1))
    assert low.pairs_checked == full.pairs_checked
    ratio_full = _min_ratio(mixed, theta, cs)
    ratio_low = _min_ratio(mixed, theta, cs.scaled(0.1))
    assert ratio_full > 1
    assert ratio_low < ratio_full


def test_figure_eight_tilts_equal_and_negative(figure_eight, solved):
    theta = solved["figure_eight"]
    radii, _ = initial_radii(figure_eight, theta, 1.0)
    report = tilt_report(figure_eight, theta, radii)
    assert len(report) == 4
    for ft in report:
        assert ft.kind is FaceKind.CONVEX
        assert ft.total == pytest.approx(-1.0, abs=1e-9)
        # every face of the regular triangulation is symmetric
        assert ft.t == pytest.approx(ft.t_prime, abs=1e-9)


def test_face_tilt_sum_lookup(figure_eight, solved):
    theta = solved["figure_eight"]
    radii, _ = initial_radii(figure_eight, theta, 2.0)
    ft = face_tilt_sum(figure_eight, theta, radii, (1, 2))
    assert (1, 2) in ft.face
    assert ft.total == pytest.approx(-2.0, abs=1e-8)
    with pytest.raises(KeyError):
        face_tilt_sum(figure_eight, theta, radii, (5, 0))


def test_regular_pair_admissible(figure_eight, solved):
    theta = solved["figure_eight"]
    for f in range(4):
        assert admissible(figure_eight, theta, (0, f))


def test_self_adjacent_face_rejected():
    glue = [Gluing(0, (1, 0, 2, 3)), Gluing(0, (1, 0, 2, 3)),
            Gluing(0, (1, 2, 3, 0)), Gluing(0, inverse((1, 2, 3, 0)))]
    tri = Triangulation.build([TetCombinatorics()], [tuple(glue)])
    with pytest.raises(SelfAdjacentFace):
        admissible(tri, np.full((1, 6), 0.3), (0, 0))


@pytest.fixture(scope="module")
def perturbed(figure_eight, solved):
    theta = solved["figure_eight"]
    radii, _ = initial_radii(figure_eight, theta)
    moved = geometric_two_three(figure_eight, theta, radii, (0, 0))
    assert moved is not None
    return moved


def test_two_three_creates_concave_face(perturbed):
    report = tilt_report(perturbed.tri, perturbed.theta, perturbed.radii)
    assert perturbed.tri.size == 3
    assert any(ft.kind is FaceKind.CONCAVE for ft in report)


def test_two_three_preserves_angle_sums(perturbed):
    theta = perturbed.theta
    for ec in perturbed.tri.edge_classes:
        total = sum(theta[m[0], m[1]] for m in ec.members)
        assert total == pytest.approx(2 * math.pi, abs=1e-9)


def test_central_face_after_two_three_is_admissible(perturbed):
    # the three new tetrahedra share a valence-three edge; undoing it is a 3-2
    tri = perturbed.tri
    ec = next(e for e in tri.edge_classes if e.valence == 3 and len(set(e.tetrahedra)) == 3)
    back = geometric_three_two(tri, perturbed.theta, perturbed.radii, ec.index)
    assert back is not None
    assert back.tri.size == 2
    t = back.new_tets[0]
    f = next(f for f, g in enumerate(back.tri.gluings[t]) if g.tet == back.new_tets[1])
    assert admissible(back.tri, back.theta, (t, f), radii=back.radii)


def test_canonize_figure_eight_zero_moves(figure_eight, solved):
    res = canonize(figure_eight, solved["figure_eight"])
    assert res.status is CanonStatus.CANONICAL
    assert res.move_count == 0
    assert res.transparent == ()
    assert res.cells == ((0,), (1,))
    assert res.self_adjacency_violations == 0


def test_canonize_undoes_two_three(figure_eight, perturbed):
    res = canonize(perturbed.tri, perturbed.theta, radii=perturbed.radii)
    assert res.status is CanonStatus.CANONICAL
    assert res.move_count == 1
    assert res.moves[0].kind == "3-2"
    assert isomorphism_signature(res.tri) == isomorphism_signature(figure_eight)
    np.testing.assert_allclose(res.theta, math.pi / 3, atol=1e-9)


def test_moves_create_convex_faces(perturbed):
    res = canonize(perturbed.tri, perturbed.theta, radii=perturbed.radii)
    for move in res.moves:
        assert all(kind == FaceKind.CONVEX.value for kind in move.new_faces)


def test_canonize_deterministic(perturbed):
    a = canonize(perturbed.tri, perturbed.theta, radii=perturbed.radii)
    b = canonize(perturbed.tri, perturbed.theta, radii=perturbed.radii)
    assert a.moves == b.moves
    np.testing.assert_array_equal(a.theta, b.theta)


def test_move_cap_reports_stuck(perturbed):
    res = canonize(perturbed.tri, perturbed.theta, CanonConfig(max_moves=0), perturbed.radii)
    assert res.status is CanonStatus.STUCK
    assert res.cap_hit


def test_canonize_mixed(mixed, solved):
    res = canonize(mixed, solved["mixed"])
    assert res.status is not CanonStatus.STUCK or not res.cap_hit
    assert res.self_adjacency_violations == 0
    assert res.cross_section is not None and res.cross_section.heights
    for ft in res.report:
        (t, _), (u, _) = ft.face
        if t == u:
            assert ft.kind is FaceKind.CONVEX


def test_canonize_no_cusps(fujii, solved):
    res = canonize(fujii, solved["fujii"])
    assert res.self_adjacency_violations == 0
    assert res.status in (CanonStatus.CANONICAL, CanonStatus.SUBDIVISION, CanonStatus.STUCK)


def test_flat_faces_give_subdivision(octahedral):
    out = solve(octahedral)
    assert out.solved
    res = canonize(octahedral, out.theta)
    assert res.status is CanonStatus.SUBDIVISION
    assert res.move_count == 0
    assert len(res.transparent) == 2
    flat = [ft for ft in res.report if ft.kind is FaceKind.FLAT]
    assert all(abs(ft.normalized) < 1e-9 for ft in flat)
    # every other face is strictly convex by a wide margin
    assert all(ft.normalized < -1 for ft in res.report if ft.kind is not FaceKind.FLAT)
    assert sorted(len(c) for c in res.cells) == [2, 2]
    assert {t for c in res.cells for t in c} == set(range(4))
    for (t, _), (u, _) in res.transparent:
        assert any(t in c and u in c for c in res.cells)


def test_cells_group_flat_faces(figure_eight, solved):
    # forcing a huge flat threshold marks every face transparent
    res = canonize(figure_eight, solved["figure_eight"], CanonConfig(eps_tilt=10.0))
    assert res.status is CanonStatus.SUBDIVISION
    assert len(res.transparent) == 4
    assert res.cells == ((0, 1),)
    assert res.cell_adjacency == ()


def test_height_scaling_instrumented(mixed, solved):
    # raising the heights should not turn a convex face concave; discrepancies are reported only
    theta = solved["mixed"]
    cs = cross_section(mixed, theta)
    before = tilt_report(mixed, theta, cs.radii)
    after = tilt_report(mixed, theta, cs.scaled(2.0).radii)
    flipped = [a.face for a, b in zip(before, after)
               if a.kind is FaceKind.CONVEX and b.kind is FaceKind.CONCAVE]
    if flipped:
        warnings.warn(f"raising heights flipped faces {flipped}")
    assert len(before) == len(after)


def test_empty_cross_section_scaled():
    cs = CrossSection({}, {}).scaled(3.0)
    assert cs.heights == {} and cs.scale == 3.0
