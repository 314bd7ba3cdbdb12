"""System description and placement files.

A system file is JSON::

    {
      "interposer_size": 45,
      "chiplets": [{"name": "gpu0", "width": 10, "height": 12, "power": 120}, ...],
      "connections": [[0, 4, ...], [4, 0, ...], ...],
      "thermal": {"grid_resolution": 64},      # optional overrides
      "anneal": {"oracle_budget": 500}         # optional overrides
    }

The legacy whitespace layout is also accepted (``#`` starts a comment)::

    interposer 45
    gpu0 10 12 120
    hbm0 8 10 20
    connections
    0 4
    4 0

A placement file is the system description plus ``x``, ``y`` (center) and
``rotated`` on every chiplet.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field, fields
from pathlib import Path
from typing import Any

import numpy as np

from .annealer import AnnealConfig
from .geometry import Chiplet, Placement, is_legal
from .netlist import Net, nets_from_matrix
from .thermal import ThermalConfig


class ParseError(ValueError):
    pass


class ValidationError(ValueError):
    pass


@dataclass
class ChipletSpec:
    name: str
    width: float
    height: float
    power: float


@dataclass
class SystemSpec:
    chiplets: list[ChipletSpec]
    connections: list[list[int]]
    interposer_size: float = 45.0
    thermal: dict[str, Any] = field(default_factory=dict)
    anneal: dict[str, Any] = field(default_factory=dict)

    def chiplet_objects(self) -> list[Chiplet]:
        return [Chiplet(i, c.width, c.height, c.power, False, c.name)
                for i, c in enumerate(self.chiplets)]

    def nets(self) -> list[Net]:
        return nets_from_matrix(self.connections) if self.chiplets else []

    def thermal_config(self, **overrides) -> ThermalConfig:
        return ThermalConfig(**{**self.thermal, **overrides})

    def anneal_config(self, **overrides) -> AnnealConfig:
        return AnnealConfig(**{**self.anneal, **overrides})

    def to_dict(self) -> dict:
        d = {
            "interposer_size": self.interposer_size,
            "chiplets": [vars(c).copy() for c in self.chiplets],
            "connections": self.connections,
        }
        if self.thermal:
            d["thermal"] = dict(self.thermal)
        if self.anneal:
            d["anneal"] = dict(self.anneal)
        return d


def _where(line: int | None) -> str:
    return f" (line {line})" if line else ""


def validate(spec: SystemSpec, lines: dict[str, int] | None = None) -> SystemSpec:
    lines = lines or {}
    if not spec.interposer_size > 0:
        raise ValidationError("interposer_size: must be positive" + _where(lines.get("interposer_size")))
    for i, c in enumerate(spec.chiplets):
        at = _where(lines.get(f"chiplets[{i}]"))
        if not (c.width > 0 and c.height > 0):
            raise ValidationError(f"chiplets[{i}] ({c.name}): width and height must be positive{at}")
        if c.power < 0:
            raise ValidationError(f"chiplets[{i}] ({c.name}): power must be nonnegative{at}")
        if max(c.width, c.height) > spec.interposer_size:
            raise ValidationError(f"chiplets[{i}] ({c.name}): {c.width}x{c.height} does not fit "
                                  f"on a {spec.interposer_size} mm interposer{at}")
    n = len(spec.chiplets)
    m = spec.connections
    if len(m) != n or any(len(row) != n for row in m):
        raise ValidationError(f"connections: expected a {n}x{n} matrix" + _where(lines.get("connections")))
    for i in range(n):
        for j in range(n):
            at = _where(lines.get(f"connections[{i}]"))
            v = m[i][j]
            if v != int(v) or v < 0:
                raise ValidationError(f"connections[{i}][{j}]: wire counts must be nonnegative integers{at}")
            if i == j and v != 0:
                raise ValidationError(f"connections[{i}][{i}]: diagonal must be zero{at}")
            if v != m[j][i]:
                raise ValidationError(f"connections[{i}][{j}]: matrix is not symmetric ({v} vs {m[j][i]}){at}")
    known = {f.name for f in fields(ThermalConfig)}
    for k in spec.thermal:
        if k not in known:
            raise ValidationError(f"thermal.{k}: unknown setting")
    known = {f.name for f in fields(AnnealConfig)}
    for k in spec.anneal:
        if k not in known:
            raise ValidationError(f"anneal.{k}: unknown setting")
    return spec


def _from_json_dict(d: dict, path) -> SystemSpec:
    try:
        chiplets = [ChipletSpec(str(c.get("name", f"c{i}")), float(c["width"]), float(c["height"]),
                                float(c.get("power", 0.0)))
                    for i, c in enumerate(d["chiplets"])]
        n = len(chiplets)
        conns = d.get("connections", [[0] * n for _ in range(n)])
        conns = [[int(v) if float(v) == int(v) else float(v) for v in row] for row in conns]
        return SystemSpec(chiplets, conns, float(d.get("interposer_size", 45.0)),
                          dict(d.get("thermal", {})), dict(d.get("anneal", {})))
    except KeyError as e:
        raise ParseError(f"{path}: missing field {e.args[0]!r}") from None
    except (TypeError, ValueError, AttributeError) as e:
        raise ParseError(f"{path}: {e}") from None


def _parse_legacy(text: str, path) -> tuple[SystemSpec, dict[str, int]]:
    chiplets: list[ChipletSpec] = []
    rows: list[list[int]] = []
    size = 45.0
    lines: dict[str, int] = {}
    in_matrix = False
    for lineno, raw in enumerate(text.splitlines(), 1):
        tok = raw.split("#", 1)[0].split()
        if not tok:
            continue
        try:
            if in_matrix:
                lines[f"connections[{len(rows)}]"] = lineno
                rows.append([int(v) for v in tok])
            elif tok[0].lower() == "interposer":
                size = float(tok[1])
                lines["interposer_size"] = lineno
            elif tok[0].lower() == "connections":
                in_matrix = True
                lines["connections"] = lineno
            else:
                if len(tok) != 4:
                    raise ValueError("expected 'name width height power'")
                lines[f"chiplets[{len(chiplets)}]"] = lineno
                chiplets.append(ChipletSpec(tok[0], float(tok[1]), float(tok[2]), float(tok[3])))
        except (ValueError, IndexError) as e:
            raise ParseError(f"{path}:{lineno}: {e}") from None
    if not in_matrix:
        rows = [[0] * len(chiplets) for _ in chiplets]
    return SystemSpec(chiplets, rows, size), lines


def parse_spec_text(text: str, path="<string>") -> SystemSpec:
    if text.lstrip().startswith("{"):
        try:
            d = json.loads(text)
        except json.JSONDecodeError as e:
            raise ParseError(f"{path}:{e.lineno}: {e.msg}") from None
        return validate(_from_json_dict(d, path))
    spec, lines = _parse_legacy(text, path)
    return validate(spec, lines)


def parse_spec(path: str | Path) -> SystemSpec:
    try:
        text = Path(path).read_text()
    except OSError as e:
        raise ParseError(f"{path}: {e.strerror}") from None
    return parse_spec_text(text, path)


def dumps_json(d: dict) -> str:
    return json.dumps(d, indent=2, sort_keys=True) + "\n"


def write_spec(spec: SystemSpec, path: str | Path) -> None:
    Path(path).write_text(dumps_json(spec.to_dict()))


# -- placements ------------------------------------------------------------

def placement_to_dict(spec: SystemSpec, p: Placement) -> dict:
    d = spec.to_dict()
    d["interposer_size"] = p.interposer_size
    for entry, c, (x, y) in zip(d["chiplets"], p.chiplets, p.centers):
        entry.update(x=x, y=y, rotated=c.rotated)
    return d


def write_placement(spec: SystemSpec, p: Placement, path: str | Path) -> None:
    Path(path).write_text(dumps_json(placement_to_dict(spec, p)))


def read_placement(path: str | Path) -> tuple[SystemSpec, Placement]:
    try:
        d = json.loads(Path(path).read_text())
    except OSError as e:
        raise ParseError(f"{path}: {e.strerror}") from None
    except json.JSONDecodeError as e:
        raise ParseError(f"{path}:{e.lineno}: {e.msg}") from None
    spec = validate(_from_json_dict(d, path))
    try:
        chiplets = [Chiplet(i, c.width, c.height, c.power, bool(raw.get("rotated", False)), c.name)
                    for i, (c, raw) in enumerate(zip(spec.chiplets, d["chiplets"]))]
        centers = [(float(raw["x"]), float(raw["y"])) for raw in d["chiplets"]]
    except KeyError as e:
        raise ParseError(f"{path}: chiplet entry missing {e.args[0]!r}") from None
    p = Placement(tuple(chiplets), tuple(centers), spec.interposer_size)
    if not is_legal(p):
        raise ValidationError(f"{path}: placement has overlapping or off-interposer chiplets")
    return spec, p


def random_system(n: int, rng: np.random.Generator, size: float = 45.0, power=(5.0, 50.0),
                  dims=(4, 12), max_wires: int = 8) -> SystemSpec:
    """Synthetic system with integer dimensions and a random symmetric netlist."""
    chiplets = [ChipletSpec(f"c{i}", float(rng.integers(dims[0], dims[1] + 1)),
                            float(rng.integers(dims[0], dims[1] + 1)),
                            float(np.round(rng.uniform(*power), 1))) for i in range(n)]
    m = np.zeros((n, n), dtype=int)
    for i in range(n):
        for j in range(i + 1, n):
            if rng.random() < 0.5:
                m[i, j] = m[j, i] = int(rng.integers(1, max_wires + 1))
    return SystemSpec(chiplets, m.tolist(), size)
