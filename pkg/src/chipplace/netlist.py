"""Inter-chiplet connectivity and wirelength estimates.

Two metrics are provided: center-to-center HPWL (used while packing) and
the pin-clump routed wirelength, where each chiplet exposes one clump at
the midpoint of every edge and each wire runs between one clump on each
endpoint chiplet at Manhattan distance.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

from .geometry import Placement

SIDES = ("left", "right", "top", "bottom")


@dataclass(frozen=True)
class Net:
    i: int
    j: int
    wire_count: int = 1
    net_id: int = 0

    def __post_init__(self):
        if self.i == self.j:
            raise ValueError("a net must join two distinct chiplets")
        if self.wire_count < 1:
            raise ValueError("wire_count must be at least 1")


@dataclass(frozen=True)
class PinClump:
    chiplet_id: int
    side: str
    location: tuple[float, float]


@dataclass
class RoutingSolution:
    # one dict per net: (side index on i, side index on j) -> wires
    assignments: list[dict[tuple[int, int], int]] = field(default_factory=list)
    total_wirelength: float = 0.0


def nets_from_matrix(matrix: Sequence[Sequence[int]]) -> list[Net]:
    """Collapse a symmetric wire-count matrix into two-pin nets (upper triangle)."""
    m = np.asarray(matrix)
    nets = []
    for i in range(m.shape[0]):
        for j in range(i + 1, m.shape[1]):
            if m[i, j] > 0:
                nets.append(Net(i, j, int(m[i, j]), len(nets)))
    return nets


def hpwl(p: Placement, nets: Sequence[Net]) -> float:
    total = 0.0
    for n in nets:
        (xi, yi), (xj, yj) = p.centers[n.i], p.centers[n.j]
        total += n.wire_count * (abs(xi - xj) + abs(yi - yj))
    return total


def clump_points(p: Placement, chiplet_id: int) -> list[tuple[float, float]]:
    x, y = p.centers[chiplet_id]
    w, h = p.chiplets[chiplet_id].dims
    return [(x - w / 2, y), (x + w / 2, y), (x, y + h / 2), (x, y - h / 2)]


def clump_locations(p: Placement, chiplet_id: int) -> list[PinClump]:
    """Clumps ordered left, right, top, bottom."""
    return [PinClump(chiplet_id, s, loc)
            for s, loc in zip(SIDES, clump_points(p, chiplet_id))]


def _distance_table(p: Placement, i: int, j: int) -> np.ndarray:
    a = np.array(clump_points(p, i))
    b = np.array(clump_points(p, j))
    return np.abs(a[:, None, 0] - b[None, :, 0]) + np.abs(a[:, None, 1] - b[None, :, 1])


def route_wirelength(p: Placement, nets: Sequence[Net]) -> RoutingSolution:
    """Minimum routed wirelength with uncapacitated clumps.

    Without capacity limits each net is independent, and all of its wires go
    to the closest clump pair. Ties keep the lexicographically first
    (left < right < top < bottom) pair.
    """
    sol = RoutingSolution()
    for n in nets:
        d = _distance_table(p, n.i, n.j)
        # argmin over the flattened 4x4 table returns the first minimum in row-major order
        flat = int(np.argmin(d))
        l, k = divmod(flat, 4)
        sol.assignments.append({(l, k): n.wire_count})
        sol.total_wirelength += n.wire_count * float(d[l, k])
    return sol


def routed_length(p: Placement, nets: Sequence[Net]) -> float:
    return route_wirelength(p, nets).total_wirelength


MAX_BRUTE_FORCE_WIRES = 12


def brute_force_route(p: Placement, nets: Sequence[Net],
                      max_states: int = 2_000_000) -> RoutingSolution:
    """Exhaustive search over every per-wire clump-pair assignment.

    Wires are assigned one at a time, branching over all 16 clump pairs.
    Partial assignments that reach an identical partial objective are merged
    (one representative is kept) since the remaining wires contribute the
    same amounts to each. Nothing else is pruned, so the minimum is taken
    over the values of all 16**W complete assignments.
    """
    wires = [(idx, n) for idx, n in enumerate(nets) for _ in range(n.wire_count)]
    if len(wires) > MAX_BRUTE_FORCE_WIRES:
        raise ValueError(f"brute force limited to {MAX_BRUTE_FORCE_WIRES} wires, got {len(wires)}")
    tables = {idx: _distance_table(p, n.i, n.j) for idx, n in enumerate(nets)}

    # partial objective -> one assignment reaching it, as a tuple of (net, l, k)
    states: dict[float, tuple] = {0.0: ()}
    for idx, _ in wires:
        d = tables[idx]
        nxt: dict[float, tuple] = {}
        for value, path in states.items():
            for l in range(4):
                for k in range(4):
                    v = value + float(d[l, k])
                    if v not in nxt:
                        nxt[v] = path + ((idx, l, k),)
        if len(nxt) > max_states:
            raise ValueError("brute-force state space too large")
        states = nxt

    best = min(states)
    sol = RoutingSolution([{} for _ in nets], best)
    for idx, l, k in states[best]:
        a = sol.assignments[idx]
        a[(l, k)] = a.get((l, k), 0) + 1
    return sol
