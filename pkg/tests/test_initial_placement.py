import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from chipplace.geometry import Chiplet, is_legal
from chipplace.initial_placement import (NONE, BStarTree, Infeasible, PackingOverflow,
                                         StageOneConfig, StageOneCost, bbox_area, chain_tree, pack,
                                         perturb, random_chain, run_stage_one, stage_one_cost,
                                         _rotate, _swap)
from chipplace.netlist import Net, hpwl

FAST = StageOneConfig(moves_per_level=20, decay=0.8)


def squares(n, side=10.0):
    return [Chiplet(i, side, side) for i in range(n)]


def rects_of(p):
    return sorted(tuple(round(v, 9) for v in r) for r in p.rects())


def test_pack_single():
    p = pack(chain_tree([0], [], [False]), squares(1))
    assert p.rect(0) == (0, 0, 10, 10)


def test_pack_left_child_goes_right():
    p = pack(chain_tree([0, 1], ["left"], [False, False]), squares(2))
    assert p.rect(1) == (10, 0, 20, 10)


def test_pack_right_child_goes_above():
    p = pack(chain_tree([0, 1], ["right"], [False, False]), squares(2))
    assert p.rect(1) == (0, 10, 10, 20)


def test_pack_contour():
    # 0 is wide and short, 1 is tall to its right, 2 sits above 0 and must clear it only
    chips = [Chiplet(0, 20, 5), Chiplet(1, 5, 20), Chiplet(2, 10, 10)]
    tree = BStarTree((0, 1, 2), (1, NONE, NONE), (2, NONE, NONE), (NONE, 0, 0), 0, (False,) * 3)
    p = pack(tree, chips)
    assert p.rect(1) == (20, 0, 25, 20)
    assert p.rect(2) == (0, 5, 10, 15)


def test_pack_rotation_flag():
    tree = chain_tree([0], [], [True])
    assert pack(tree, [Chiplet(0, 4, 9)]).rect(0) == (0, 0, 9, 4)


def test_pack_overflow():
    with pytest.raises(PackingOverflow):
        pack(chain_tree([0, 1, 2, 3, 4], ["left"] * 4, [False] * 5), squares(5), 45.0)


def test_rotate_single_node():
    tree = chain_tree([0], [], [False])
    t2 = _rotate(tree, np.random.default_rng(0))
    assert t2.rotated == (True,)
    assert (t2.block, t2.left, t2.right, t2.parent, t2.root) == \
        (tree.block, tree.left, tree.right, tree.parent, tree.root)


def test_swap_picks_distinct_nodes():
    rng = np.random.default_rng(0)
    tree = chain_tree([0, 1, 2], ["left", "right"], [False] * 3)
    for _ in range(50):
        assert _swap(tree, rng).block != tree.block


def random_tree(n, seed, steps=30):
    rng = np.random.default_rng(seed)
    t = random_chain(n, rng)
    for _ in range(steps):
        t = perturb(t, rng)
    rot = tuple(bool(b) for b in rng.random(n) < 0.5)
    return BStarTree(t.block, t.left, t.right, t.parent, t.root, rot)


def random_chips(n, seed):
    rng = np.random.default_rng(seed)
    return [Chiplet(i, float(rng.integers(1, 15)), float(rng.integers(1, 15))) for i in range(n)]


@settings(max_examples=300, deadline=None)
@given(st.integers(1, 9), st.integers(0, 2**31))
def test_perturbed_trees_valid_and_overlap_free(n, seed):
    tree = random_tree(n, seed)
    assert tree.is_valid()
    p = pack(tree, random_chips(n, seed))
    assert is_legal(p)
    x0, y0, _, _ = p.bounding_box()
    assert (x0, y0) == (0, 0)


def test_perturb_covers_all_moves():
    rng = np.random.default_rng(1)
    tree = chain_tree([0, 1, 2, 3], ["left", "right", "left"], [False] * 4)
    kinds = set()
    for _ in range(200):
        t = perturb(tree, rng)
        if t.rotated != tree.rotated:
            kinds.add("rotate")
        elif t.left == tree.left and t.right == tree.right:
            kinds.add("swap")
        else:
            kinds.add("delete-insert")
    assert kinds == {"rotate", "swap", "delete-insert"}


# -- cost ------------------------------------------------------------------

def test_cost_examples():
    ext = StageOneCost()
    ext.update(100.0, 400.0)
    ext.update(200.0, 900.0)
    assert ext(100.0, 400.0) == 0.0
    assert ext(200.0, 900.0) == 1.0
    assert ext(150.0, 400.0) == 0.25


def test_cost_degenerate_extremes():
    ext = StageOneCost()
    ext.update(5.0, 10.0)
    assert ext(5.0, 10.0) == 0.0


def test_stage_one_cost_on_placement():
    p = pack(chain_tree([0, 1], ["left"], [False, False]), squares(2))
    ext = StageOneCost()
    ext.update(hpwl(p, [Net(0, 1)]), bbox_area(p))
    assert stage_one_cost(p, [Net(0, 1)], ext) == 0.0


# -- runs ------------------------------------------------------------------

def test_single_chiplet_centered():
    res = run_stage_one([Chiplet(0, 10, 6)], [], 45.0, FAST, seed=0)
    assert res.placement.centers[0] == (22.5, 22.5)
    assert res.cost <= res.initial_cost


def test_two_squares_hpwl_not_worse():
    nets = [Net(0, 1)]
    res = run_stage_one(squares(2), nets, 45.0, FAST, seed=3)
    assert hpwl(res.placement, nets) <= hpwl(res.initial_placement, nets)


def test_four_squares_area_not_worse():
    res = run_stage_one(squares(4, 8.0), [], 45.0, FAST, seed=4)
    assert bbox_area(res.placement) <= bbox_area(res.initial_placement)
    assert bbox_area(res.placement) == pytest.approx(256.0)


def test_result_is_minimum_over_evaluated():
    chips = random_chips(5, 2)
    nets = [Net(0, 1, 3), Net(2, 4, 1), Net(1, 3, 2)]
    res = run_stage_one(chips, nets, 45.0, FAST, seed=9)
    costs = [res.extremes(L, A) for L, A in res.history]
    assert res.cost == min(costs)
    assert res.cost == pytest.approx(stage_one_cost(res.placement, nets, res.extremes))
    assert is_legal(res.placement)


def test_deterministic_given_seed():
    chips = random_chips(5, 1)
    nets = [Net(0, 1, 2), Net(3, 4, 1)]
    a = run_stage_one(chips, nets, 45.0, FAST, seed=5)
    b = run_stage_one(chips, nets, 45.0, FAST, seed=5)
    assert a.placement == b.placement and a.cost == b.cost


def test_infeasible_when_nothing_fits():
    with pytest.raises(Infeasible):
        run_stage_one(squares(5, 30.0), [], 45.0, StageOneConfig(init_attempts=20), seed=0)
