"""Compact initial placement: B*-tree packing explored by simulated annealing.

In a B*-tree the left child of a block sits immediately to its right and the
right child sits above it at the same x. Packing walks the tree depth-first
and drops each block onto the contour of the blocks already placed.

The tree is stored as ``n`` slots; each slot holds one chiplet id and links
to its parent and children by slot index. Swapping two chiplets is then a
swap of slot contents, and delete/reinsert moves a slot.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

from .geometry import EPS, Chiplet, Placement
from .netlist import Net, hpwl

NONE = -1


class PackingOverflow(ValueError):
    pass


class Infeasible(RuntimeError):
    pass


@dataclass(frozen=True)
class BStarTree:
    block: tuple[int, ...]  # slot -> chiplet id
    left: tuple[int, ...]
    right: tuple[int, ...]
    parent: tuple[int, ...]
    root: int
    rotated: tuple[bool, ...]  # indexed by chiplet position

    def __len__(self):
        return len(self.block)

    def is_valid(self) -> bool:
        n = len(self.block)
        if sorted(self.block) != list(range(n)) or len(self.rotated) != n:
            return False
        if not (0 <= self.root < n) or self.parent[self.root] != NONE:
            return False
        seen = set()
        stack = [self.root]
        while stack:
            s = stack.pop()
            if s in seen:
                return False
            seen.add(s)
            for c in (self.left[s], self.right[s]):
                if c != NONE:
                    if self.parent[c] != s:
                        return False
                    stack.append(c)
        return len(seen) == n

    def preorder(self) -> list[int]:
        out, stack = [], [self.root]
        while stack:
            s = stack.pop()
            out.append(s)
            if self.right[s] != NONE:
                stack.append(self.right[s])
            if self.left[s] != NONE:
                stack.append(self.left[s])
        return out


def chain_tree(order: Sequence[int], sides: Sequence[str], rotated: Sequence[bool]) -> BStarTree:
    """A tree where slot ``t+1`` hangs off slot ``t`` on side ``sides[t]``."""
    n = len(order)
    left = [NONE] * n
    right = [NONE] * n
    parent = [NONE] * n
    for t in range(1, n):
        parent[t] = t - 1
        if sides[t - 1] == "left":
            left[t - 1] = t
        else:
            right[t - 1] = t
    return BStarTree(tuple(order), tuple(left), tuple(right), tuple(parent), 0, tuple(rotated))


def random_chain(n: int, rng: np.random.Generator) -> BStarTree:
    order = rng.permutation(n).tolist()
    sides = ["left" if s else "right" for s in rng.random(max(n - 1, 0)) < 0.5]
    return chain_tree(order, sides, [False] * n)


def pack(tree: BStarTree, chiplets: Sequence[Chiplet], interposer_size: float = math.inf) -> Placement:
    """Pack the tree into a placement with its bounding box at the origin."""
    chips = [c if c.rotated == tree.rotated[i] else c.toggled() for i, c in enumerate(chiplets)]
    n = len(chips)
    x0 = [0.0] * n
    y0 = [0.0] * n
    placed: list[tuple[float, float, float]] = []  # (x_lo, x_hi, y_top) of placed slots
    for s in tree.preorder():
        p = tree.parent[s]
        if p == NONE:
            x = 0.0
        elif tree.left[p] == s:
            x = x0[p] + chips[tree.block[p]].dims[0]
        else:
            x = x0[p]
        w, h = chips[tree.block[s]].dims
        y = 0.0
        for lo, hi, top in placed:
            if min(hi, x + w) - max(lo, x) > EPS and top > y:
                y = top
        x0[s], y0[s] = x, y
        placed.append((x, x + w, y + h))

    centers = [(0.0, 0.0)] * n
    for s in range(n):
        cid = tree.block[s]
        w, h = chips[cid].dims
        centers[cid] = (x0[s] + w / 2, y0[s] + h / 2)
    width = max(hi for _, hi, _ in placed)
    height = max(top for _, _, top in placed)
    if width > interposer_size + EPS or height > interposer_size + EPS:
        raise PackingOverflow(f"packing {width:g}x{height:g} exceeds interposer {interposer_size:g}")
    size = interposer_size if math.isfinite(interposer_size) else max(width, height)
    return Placement(tuple(chips), tuple(centers), size)


# -- perturbation ----------------------------------------------------------

def _rotate(tree: BStarTree, rng) -> BStarTree:
    c = int(rng.integers(len(tree)))
    rot = list(tree.rotated)
    rot[c] = not rot[c]
    return BStarTree(tree.block, tree.left, tree.right, tree.parent, tree.root, tuple(rot))


def _swap(tree: BStarTree, rng) -> BStarTree:
    a, b = rng.choice(len(tree), size=2, replace=False)
    block = list(tree.block)
    block[a], block[b] = block[b], block[a]
    return BStarTree(tuple(block), tree.left, tree.right, tree.parent, tree.root, tree.rotated)


def _delete_insert(tree: BStarTree, rng) -> BStarTree:
    n = len(tree)
    block, left, right, parent = (list(tree.block), list(tree.left),
                                  list(tree.right), list(tree.parent))
    root = tree.root
    s = int(rng.integers(n))
    moved = block[s]
    # push the chiplet down to a leaf by pulling children up along a random path
    while left[s] != NONE or right[s] != NONE:
        kids = [c for c in (left[s], right[s]) if c != NONE]
        c = kids[int(rng.integers(len(kids)))]
        block[s] = block[c]
        s = c
    p = parent[s]
    if p != NONE:
        if left[p] == s:
            left[p] = NONE
        else:
            right[p] = NONE
    # slot s is free now; reinsert it under a random remaining slot
    others = [t for t in range(n) if t != s]
    parent[s] = NONE
    block[s] = moved
    if not others:
        return tree
    q = others[int(rng.integers(len(others)))]
    side = "left" if rng.random() < 0.5 else "right"
    kids = left if side == "left" else right
    old = kids[q]
    kids[q] = s
    parent[s] = q
    left[s] = right[s] = NONE
    if old != NONE:
        # old subtree continues on the same side of the inserted slot
        (left if side == "left" else right)[s] = old
        parent[old] = s
    return BStarTree(tuple(block), tuple(left), tuple(right), tuple(parent), root, tree.rotated)


def perturb(tree: BStarTree, rng: np.random.Generator) -> BStarTree:
    """Apply one move chosen uniformly from rotate, delete-and-reinsert and swap."""
    if len(tree) < 2:
        return _rotate(tree, rng)
    moves = (_rotate, _delete_insert, _swap)
    return moves[int(rng.integers(3))](tree, rng)


# -- cost and annealing ----------------------------------------------------

@dataclass
class StageOneCost:
    l_min: float = math.inf
    l_max: float = -math.inf
    a_min: float = math.inf
    a_max: float = -math.inf

    def update(self, L: float, A: float) -> None:
        self.l_min, self.l_max = min(self.l_min, L), max(self.l_max, L)
        self.a_min, self.a_max = min(self.a_min, A), max(self.a_max, A)

    def __call__(self, L: float, A: float) -> float:
        cost = 0.0
        if self.l_max > self.l_min:
            cost += 0.5 * (L - self.l_min) / (self.l_max - self.l_min)
        if self.a_max > self.a_min:
            cost += 0.5 * (A - self.a_min) / (self.a_max - self.a_min)
        return cost


def bbox_area(p: Placement) -> float:
    x0, y0, x1, y1 = p.bounding_box()
    return (x1 - x0) * (y1 - y0)


def stage_one_cost(p: Placement, nets: Sequence[Net], extremes: StageOneCost) -> float:
    return extremes(hpwl(p, nets), bbox_area(p))


@dataclass(frozen=True)
class StageOneConfig:
    t0: float = 1.0
    decay: float = 0.95
    moves_per_level: int = 200
    t_stop: float = 1e-4
    init_attempts: int = 1000


@dataclass
class StageOneResult:
    placement: Placement
    tree: BStarTree
    cost: float  # stage-one cost of the result under the final extremes
    initial_cost: float
    initial_placement: Placement
    evaluated: int
    history: list[tuple[float, float]] = field(repr=False, default_factory=list)
    extremes: StageOneCost = field(default_factory=StageOneCost)


def center_on_interposer(p: Placement, size: float) -> Placement:
    x0, y0, x1, y1 = p.bounding_box()
    moved = p.translated(size / 2 - (x0 + x1) / 2, size / 2 - (y0 + y1) / 2)
    return Placement(moved.chiplets, moved.centers, size)


def run_stage_one(chiplets: Sequence[Chiplet], nets: Sequence[Net], interposer_size: float,
                  cfg: StageOneConfig = StageOneConfig(), seed=None) -> StageOneResult:
    """Fast-SA over B*-trees minimizing normalized HPWL plus bounding-box area.

    Every legal packing evaluated is recorded; the result is the one with the
    lowest cost under the extremes seen over the whole run.
    """
    rng = np.random.default_rng(seed)
    chiplets = list(chiplets)
    n = len(chiplets)
    if n == 0:
        raise Infeasible("no chiplets to place")

    tree = None
    for _ in range(cfg.init_attempts):
        cand = random_chain(n, rng)
        try:
            p = pack(cand, chiplets, interposer_size)
        except PackingOverflow:
            continue
        tree = cand
        break
    if tree is None:
        # chains overflow easily; random walks in tree space before giving up
        cand = random_chain(n, rng)
        for _ in range(cfg.init_attempts * 10):
            cand = perturb(cand, rng)
            try:
                p = pack(cand, chiplets, interposer_size)
            except PackingOverflow:
                continue
            tree = cand
            break
    if tree is None:
        raise Infeasible("no packing fits on the interposer")

    ext = StageOneCost()
    L, A = hpwl(p, nets), bbox_area(p)
    ext.update(L, A)
    history = [(L, A)]
    trees = [tree]
    cur_L, cur_A = L, A

    t = cfg.t0
    while t >= cfg.t_stop:
        for _ in range(cfg.moves_per_level):
            cand = perturb(tree, rng)
            try:
                q = pack(cand, chiplets, interposer_size)
            except PackingOverflow:
                continue
            L, A = hpwl(q, nets), bbox_area(q)
            ext.update(L, A)
            history.append((L, A))
            trees.append(cand)
            delta = ext(L, A) - ext(cur_L, cur_A)
            if delta <= 0 or rng.random() < math.exp(-delta / t):
                tree, cur_L, cur_A = cand, L, A
        t *= cfg.decay

    hist = np.array(history)
    costs = np.array([ext(L, A) for L, A in hist])
    best = int(np.argmin(costs))
    best_tree = trees[best]
    placement = center_on_interposer(pack(best_tree, chiplets, interposer_size), interposer_size)
    initial = center_on_interposer(pack(trees[0], chiplets, interposer_size), interposer_size)
    return StageOneResult(placement, best_tree, float(costs[best]), float(costs[0]), initial,
                          len(history), history, ext)
