import pytest
from hypothesis import given, settings, strategies as st

from chipplace.geometry import (DIRECTIONS, Chiplet, Placement, free_positions, is_legal,
                                overlaps, try_jump, try_move)

from conftest import place, square


def test_disjoint_squares_are_legal():
    assert is_legal(place([square(0), square(1)], [(10, 10), (30, 30)]))


def test_coincident_squares_overlap():
    assert not is_legal(place([square(0), square(1)], [(10, 10), (10, 10)]))


def test_off_interposer_is_illegal():
    assert not is_legal(place([square(0)], [(4, 10)]))


def test_abutting_and_boundary_are_legal():
    p = place([square(0), square(1)], [(5, 5), (15, 5)])
    assert is_legal(p)
    assert is_legal(place([square(0, 45)], [(22.5, 22.5)]))


def test_rotation_swaps_dims():
    c = Chiplet(0, 10, 20)
    assert c.dims == (10, 20)
    assert c.toggled().dims == (20, 10)


@pytest.mark.parametrize("w,h,power", [(0, 1, 0), (1, -1, 0), (1, 1, -0.5)])
def test_chiplet_rejects_bad_fields(w, h, power):
    with pytest.raises(ValueError):
        Chiplet(0, w, h, power)


def test_move_left_on_empty_interposer():
    p = place([square(0)], [(10, 10)])
    q = try_move(p, 0, "left", 1.0)
    assert q.centers[0] == (9.0, 10.0)
    assert p.centers[0] == (10.0, 10.0)


def test_move_across_edge_rejected():
    assert try_move(place([square(0)], [(5, 10)]), 0, "left", 1.0) is None


def test_move_into_neighbour_rejected():
    # abutting neighbour at x in [15, 25]: a 1 mm push shares the strip (15, 16)
    p = place([square(0), square(1)], [(10, 10), (20, 10)])
    assert try_move(p, 0, "right", 1.0) is None
    assert try_move(p, 0, "left", 1.0) is not None


def test_move_into_contact_is_allowed():
    # neighbour at x in [16, 26]: 1 mm closes the gap to contact, 2 mm overlaps
    p = place([square(0), square(1)], [(10, 10), (21, 10)])
    q = try_move(p, 0, "right", 1.0)
    assert q is not None and q.centers[0] == (11.0, 10.0)
    assert try_move(p, 0, "right", 2.0) is None


def test_move_requires_positive_distance():
    with pytest.raises(ValueError):
        try_move(place([square(0)], [(10, 10)]), 0, "up", 0)


def test_jump_with_rotation():
    p = place([Chiplet(0, 10, 20)], [(5, 10)])
    q = try_jump(p, 0, (22.5, 22.5), rotate=True)
    assert q is not None and is_legal(q)
    assert q.chiplets[0].dims == (20, 10)
    assert q.centers[0] == (22.5, 22.5)


def test_jump_out_of_bounds_rejected():
    assert try_jump(place([square(0)], [(10, 10)]), 0, (2, 2), False) is None


def test_jump_onto_occupied_rejected():
    p = place([square(0), square(1)], [(10, 10), (30, 30)])
    assert try_jump(p, 0, (30, 30), False) is None


def test_free_positions_full_size_chiplet():
    assert free_positions(place([square(0, 45)], [(22.5, 22.5)]), 0, False) == []


def test_free_positions_small_lattice():
    p = place([square(0, 1)], [(0.5, 0.5)], size=3)
    # brute-force: lower-left corners on {0,1,2}^2, minus the current one
    expected = {(x + 0.5, y + 0.5) for x in range(3) for y in range(3)} - {(0.5, 0.5)}
    got = free_positions(p, 0, False, 1.0)
    assert len(got) == 8
    assert set(got) == expected


def test_free_positions_tiled_interposer():
    p = place([Chiplet(0, 22.5, 45), Chiplet(1, 22.5, 45)], [(11.25, 22.5), (33.75, 22.5)])
    assert free_positions(p, 0, False) == []
    assert free_positions(p, 1, True) == []


# -- properties ------------------------------------------------------------

coord = st.integers(0, 90).map(lambda v: v / 2)
side = st.integers(2, 24).map(lambda v: v / 2)


@st.composite
def legal_placements(draw, max_n=5):
    n = draw(st.integers(1, max_n))
    chips, centers = [], []
    for i in range(n):
        c = Chiplet(i, draw(side), draw(side), rotated=draw(st.booleans()))
        w, h = c.dims
        cx = draw(st.integers(0, int((45 - w) * 2))) / 2 + w / 2
        cy = draw(st.integers(0, int((45 - h) * 2))) / 2 + h / 2
        trial = Placement.build(chips + [c], centers + [(cx, cy)])
        if is_legal(trial):
            chips.append(c)
            centers.append((cx, cy))
    if not chips:
        chips, centers = [Chiplet(0, 1, 1)], [(0.5, 0.5)]
    return Placement.build(chips, centers)


OPPOSITE = {"left": "right", "right": "left", "up": "down", "down": "up"}


@settings(max_examples=200, deadline=None)
@given(legal_placements(), st.data())
def test_move_roundtrip_and_legality(p, data):
    i = data.draw(st.integers(0, len(p) - 1))
    d = data.draw(st.sampled_from([0.5, 1.0, 2.0, 3.0]))
    direction = data.draw(st.sampled_from(DIRECTIONS))
    q = try_move(p, i, direction, d)
    if q is None:
        return
    assert is_legal(q)
    back = try_move(q, i, OPPOSITE[direction], d)
    assert back is not None
    assert back.centers == p.centers


@settings(max_examples=100, deadline=None)
@given(legal_placements(max_n=4), st.data())
def test_free_positions_always_jumpable(p, data):
    i = data.draw(st.integers(0, len(p) - 1))
    rotate = data.draw(st.booleans())
    spots = free_positions(p, i, rotate, 1.0)
    for spot in spots[:: max(1, len(spots) // 40)]:
        q = try_jump(p, i, spot, rotate)
        assert q is not None and is_legal(q)
        assert spot != p.centers[i]


rect = st.tuples(coord, coord, side, side).map(lambda t: (t[0], t[1], t[0] + t[2], t[1] + t[3]))


@given(rect, rect)
def test_overlap_symmetric(a, b):
    assert overlaps(a, b) == overlaps(b, a)
