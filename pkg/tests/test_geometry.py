import math

import numpy as np
import pytest
from hypothesis import assume, given
from hypothesis import strategies as st

from oracles import along_track, circle_chord, sampled_chord
from vegloss.errors import InvalidGeometry, NotFound, ParseError
from vegloss.geometry import (PlanarPoint, RaySegment, RxPoint, SiteGeometry, Tree, TreeEllipse,
                              chord_length, dump_site, load_site, parse_site, project_to_vertical_plane,
                              reference_site_text, total_chord, tx_rx_distance, vegetation_depth)

SURVEY = {
    "LoS1": (64.5, 0.0), "Veg1": (74.7, 5.18), "Veg2": (83.1, 15.59), "Veg3": (90.9, 22.18),
    "Veg4": (97.5, 27.82), "Veg5": (116.7, 26.85), "Veg6": (126.0, 24.31),
}


def seg(x0, z0, x1, z1):
    return RaySegment(PlanarPoint(x0, z0), PlanarPoint(x1, z1))


def ell(cx, cz, a, b):
    return TreeEllipse(PlanarPoint(cx, cz), a, b)


def site_with(trees, rx=((60.0, 0.0, 2.0),), radius=5.0):
    return SiteGeometry((0.0, 0.0, 20.0), tuple(RxPoint(f"R{i}", p) for i, p in enumerate(rx)), tuple(trees), radius)


# --- chord_length ------------------------------------------------------------------

def test_unit_circle_diameter():
    assert chord_length(ell(0, 0, 1, 1), seg(-2, 0, 2, 0)) == pytest.approx(2.0, abs=1e-15)


def test_unit_circle_miss():
    assert chord_length(ell(0, 0, 1, 1), seg(-2, 2, 2, 2)) == 0.0


def test_tangent_line_gives_zero():
    assert chord_length(ell(0, 0, 1, 1), seg(-2, 1, 2, 1)) == 0.0
    assert chord_length(ell(3, 4, 2, 0.5), seg(0, 4.5, 6, 4.5)) == 0.0


def test_segment_clamped_to_its_endpoints():
    # starts at the centre: only half the diameter counts
    assert chord_length(ell(0, 0, 1, 1), seg(0, 0, 5, 0)) == pytest.approx(1.0)
    # entirely inside
    assert chord_length(ell(0, 0, 3, 2), seg(-1, 0, 1, 0.5)) == pytest.approx(math.hypot(2, 0.5))
    # stops short of the ellipse
    assert chord_length(ell(10, 0, 1, 1), seg(0, 0, 8, 0)) == 0.0


@pytest.mark.parametrize("a,b", [(0, 1), (1, 0), (-1, 2)])
def test_degenerate_ellipse_rejected(a, b):
    with pytest.raises(InvalidGeometry):
        TreeEllipse(PlanarPoint(0, 0), a, b)


def test_degenerate_segment_rejected():
    with pytest.raises(InvalidGeometry):
        seg(1, 1, 1, 1)


def test_oblique_segments_match_sampling_oracle(rng):
    e = ell(10, 5, 3, 1)
    for _ in range(20):
        p = np.array([10, 5]) + rng.uniform(-0.9, 0.9, 2) * [3, 1]
        ang = rng.uniform(0.1, math.pi - 0.1)
        u = np.array([math.cos(ang), math.sin(ang)])
        s, t = p - rng.uniform(1, 8) * u, p + rng.uniform(1, 8) * u
        expected = sampled_chord(s, t, (10, 5), 3, 1)
        assert chord_length(e, seg(*s, *t)) == pytest.approx(expected, rel=1e-4)


finite = st.floats(-50, 50, allow_nan=False)
axis = st.floats(0.05, 10)


@given(cx=finite, cz=finite, a=axis, b=axis, x0=finite, z0=finite, x1=finite, z1=finite,
       dx=finite, dz=finite)
def test_translation_invariance(cx, cz, a, b, x0, z0, x1, z1, dx, dz):
    assume(math.hypot(x1 - x0, z1 - z0) > 1e-3)
    base = chord_length(ell(cx, cz, a, b), seg(x0, z0, x1, z1))
    moved = chord_length(ell(cx + dx, cz + dz, a, b), seg(x0 + dx, z0 + dz, x1 + dx, z1 + dz))
    assert moved == pytest.approx(base, abs=1e-9, rel=1e-9)


@given(cx=finite, cz=finite, a=axis, b=axis, x0=finite, z0=finite, x1=finite, z1=finite)
def test_mirror_invariance(cx, cz, a, b, x0, z0, x1, z1):
    assume(math.hypot(x1 - x0, z1 - z0) > 1e-3)
    base = chord_length(ell(cx, cz, a, b), seg(x0, z0, x1, z1))
    mirrored = chord_length(ell(-cx, cz, a, b), seg(-x0, z0, -x1, z1))
    assert mirrored == pytest.approx(base, abs=1e-9)


@given(r=st.floats(0.1, 20), frac=st.floats(0, 0.999), ang=st.floats(0, 2 * math.pi),
       cx=finite, cz=finite)
def test_circle_matches_analytic_chord(r, frac, ang, cx, cz):
    rho = frac * r
    n = np.array([math.cos(ang), math.sin(ang)])
    t = np.array([-n[1], n[0]])
    foot = np.array([cx, cz]) + rho * n
    s, e = foot - 3 * r * t, foot + 3 * r * t
    got = chord_length(ell(cx, cz, r, r), seg(*s, *e))
    assert got == pytest.approx(circle_chord(r, rho), abs=1e-9)


@given(cx=finite, cz=finite, a=axis, b=axis, ang=st.floats(0, math.pi), off=st.floats(-1.2, 1.2),
       extra=st.floats(0, 100))
def test_extending_a_covering_segment_changes_nothing(cx, cz, a, b, ang, off, extra):
    u = np.array([math.cos(ang), math.sin(ang)])
    p = np.array([cx, cz]) + off * np.array([-u[1] * a, u[0] * b])
    reach = 2.5 * max(a, b)
    base = chord_length(ell(cx, cz, a, b), seg(*(p - reach * u), *(p + reach * u)))
    longer = chord_length(ell(cx, cz, a, b), seg(*(p - (reach + extra) * u), *(p + reach * u)))
    assert longer == pytest.approx(base, abs=1e-9)
    assert base <= 2 * max(a, b) + 1e-9


# --- projection / depth ---------------------------------------------------------------

def test_tree_on_track_halves_canopy():
    site = site_with([Tree("t", 30.0, 0.0, 10.0, 8.0, 6.0)])
    _, ells = project_to_vertical_plane(site, "R0")
    assert ells[0].a == 4.0 and ells[0].b == 3.0
    assert ells[0].center == PlanarPoint(30.0, 10.0)


def test_far_off_track_tree_excluded():
    site = site_with([Tree("t", 30.0, 50.0, 10.0, 8.0, 6.0)], radius=10.0)
    assert project_to_vertical_plane(site, "R0")[1] == []


def test_ray_endpoints():
    site = SiteGeometry((5.0, 5.0, 25.0), (RxPoint("r", (8.0, 9.0, 1.5)),))
    ray, _ = project_to_vertical_plane(site, "r")
    assert ray.start == PlanarPoint(0.0, 25.0)
    assert ray.end == PlanarPoint(5.0, 1.5)


def test_projection_matches_vector_oracle(rng):
    for _ in range(50):
        tx = (*rng.uniform(-100, 100, 2), rng.uniform(5, 40))
        rx = (*rng.uniform(-100, 100, 2), rng.uniform(0.5, 3))
        trees = [Tree(f"t{i}", *rng.uniform(-100, 100, 2), 8.0, 6.0, 5.0) for i in range(20)]
        site = SiteGeometry(tx, (RxPoint("r", rx),), tuple(trees), lateral_inclusion_radius=1e9)
        _, ells = project_to_vertical_plane(site, "r")
        for t, e in zip(trees, ells):
            along, _ = along_track(tx[:2], rx[:2], (t.easting, t.northing))
            assert e.center.x == pytest.approx(along, abs=1e-9)


def test_lateral_filter_matches_oracle(rng):
    tx, rx = (0.0, 0.0, 20.0), (80.0, 30.0, 2.0)
    trees = [Tree(f"t{i}", *rng.uniform(-20, 100, 2), 8.0, 6.0, 5.0) for i in range(200)]
    site = SiteGeometry(tx, (RxPoint("r", rx),), tuple(trees), 7.5)
    kept = {e.label for e in project_to_vertical_plane(site, "r")[1]}
    expected = {t.id for t in trees if along_track(tx[:2], rx[:2], (t.easting, t.northing))[1] <= 7.5}
    assert kept == expected


def test_unknown_rx():
    with pytest.raises(NotFound):
        vegetation_depth(site_with([]), "nope")


def test_no_trees_zero_depth():
    assert vegetation_depth(site_with([]), "R0") == 0.0


def test_two_disjoint_circles_summed():
    ray = seg(0, 0, 20, 0)
    assert total_chord([ell(5, 0, 1, 1), ell(12, 0, 1, 1)], ray) == pytest.approx(4.0)


def test_overlapping_canopies_double_count():
    ray = seg(0, 0, 20, 0)
    assert total_chord([ell(10, 0, 2, 1), ell(11, 0, 2, 1)], ray) == pytest.approx(8.0)


@given(st.lists(st.tuples(st.floats(5, 55), st.floats(-5, 30), st.floats(0.5, 8), st.floats(0.5, 8)),
                max_size=12), st.integers(0, 12))
def test_depth_additive_over_tree_split(trees, cut):
    ells = [ell(*t) for t in trees]
    ray = seg(0, 20, 60, 2)
    whole = total_chord(ells, ray)
    assert whole == pytest.approx(total_chord(ells[:cut], ray) + total_chord(ells[cut:], ray), abs=1e-9)


@given(st.lists(st.tuples(st.floats(5, 55), st.floats(-5, 30), st.floats(0.5, 8), st.floats(0.5, 8)),
                min_size=1, max_size=8), st.floats(0.1, 1.0))
def test_shrinking_canopies_never_adds_depth(trees, factor):
    ray = seg(0, 20, 60, 2)
    big = total_chord([ell(*t) for t in trees], ray)
    small = total_chord([ell(cx, cz, a * factor, b * factor) for cx, cz, a, b in trees], ray)
    assert small <= big + 1e-9


def test_distance_pythagoras():
    site = SiteGeometry((0.0, 0.0, 20.0), (RxPoint("r", (60.4, 0.0, 2.0)),))
    assert tx_rx_distance(site, "r") == pytest.approx(math.hypot(60.4, 18.0))
    assert tx_rx_distance(site, "r") == pytest.approx(63.02, abs=0.01)


def test_distance_matches_norm(rng):
    for _ in range(100):
        tx = rng.uniform(-100, 100, 3)
        tx[2] = abs(tx[2]) + 1
        rx = rng.uniform(-100, 100, 3)
        site = SiteGeometry(tuple(tx), (RxPoint("r", tuple(rx)),))
        assert tx_rx_distance(site, "r") == pytest.approx(np.linalg.norm(rx - tx), abs=1e-9)


# --- reference site and file format ---------------------------------------------------

def test_reference_site_reproduces_survey_table(ref_site):
    assert ref_site.rx_ids == sorted(SURVEY)
    for rid, (dist, depth) in SURVEY.items():
        assert tx_rx_distance(ref_site, rid) == pytest.approx(dist, abs=0.1)
        assert vegetation_depth(ref_site, rid) == pytest.approx(depth, abs=0.01)


def test_veg6_crosses_several_trees(ref_site):
    ray, ells = project_to_vertical_plane(ref_site, "Veg6")
    assert sum(chord_length(e, ray) > 0 for e in ells) >= 2


def test_site_dump_round_trip(ref_site):
    again = parse_site(dump_site(ref_site))
    assert again == ref_site


def test_load_by_name_equals_file(tmp_path, ref_site):
    p = tmp_path / "site.yaml"
    p.write_text(reference_site_text())
    assert load_site(p) == ref_site == load_site("usc_mcclintock")


MINIMAL = """\
units:
  length: m
tx: {easting: 0, northing: 0, height: 20}
rx_points:
  - {id: A, easting: 50, northing: 0, height: 2}
trees: []
"""


def test_minimal_site_parses():
    site = parse_site(MINIMAL)
    assert site.lateral_inclusion_radius == 5.0
    assert vegetation_depth(site, "A") == 0.0


@pytest.mark.parametrize("text,line,needle", [
    (MINIMAL.replace("units:\n  length: m\n", ""), 1, "missing key 'units'"),
    (MINIMAL + "colour: green\n", 7, "unknown key 'colour'"),
    (MINIMAL.replace("height: 2}", "height: 2, species: oak}"), 5, "unknown key 'species'"),
    (MINIMAL.replace("length: m", "length: ft"), 2, "unsupported length unit"),
    (MINIMAL.replace("height: 20", "height: high"), 3, "must be a number"),
    (MINIMAL.replace("trees: []", "trees:\n  - {id: t, easting: 1, northing: 1, canopy_center_height: 5, "
                                  "canopy_width: 0, canopy_height: 3}"), 7, "canopy_width must be > 0"),
    (MINIMAL + "rx_points: []\n", 7, "duplicate key"),
    ("units: [\n", 2, "invalid YAML"),
])
def test_site_parse_errors_carry_line_numbers(text, line, needle):
    with pytest.raises(ParseError) as err:
        parse_site(text, "s.yaml")
    assert needle in str(err.value)
    assert err.value.line == line
    assert str(err.value).startswith(f"s.yaml:{line}:")


@pytest.mark.parametrize("tx,rx", [
    ((0.0, 0.0, 0.0), [("a", (1.0, 1.0, 1.0))]),
    ((0.0, 0.0, 5.0), [("a", (1.0, 1.0, 1.0)), ("a", (2.0, 1.0, 1.0))]),
    ((0.0, 0.0, 5.0), [("a", (0.0, 0.0, 5.0))]),
])
def test_site_invariants(tx, rx):
    with pytest.raises(InvalidGeometry):
        SiteGeometry(tx, tuple(RxPoint(i, p) for i, p in rx))


def test_receiver_straight_below_tx_has_no_vertical_plane():
    site = SiteGeometry((0.0, 0.0, 20.0), (RxPoint("r", (0.0, 0.0, 2.0)),))
    with pytest.raises(InvalidGeometry):
        project_to_vertical_plane(site, "r")
