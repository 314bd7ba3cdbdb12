"""Stage two: surrogate-assisted thermal-aware annealing.

Candidates come from short directional moves or from jumps to any free
lattice position (with a 90 degree turn). Their peak temperature is
predicted by the RBF surrogate, and every ``oracle_interleave``-th step the
thermal oracle is run on the candidate (and, if not cached, on the current
placement) so that acceptance is decided on true temperatures. Only
oracle-evaluated accepted candidates may replace the best solution, so the
best solution's temperature is always an oracle value.
"""

from __future__ import annotations

import logging
import math
from dataclasses import asdict, dataclass, field
from typing import Sequence

import numpy as np

from .geometry import DIRECTIONS, Placement, free_positions, is_legal, try_jump, try_move
from .netlist import Net, routed_length
from .surrogate import (SampleStore, SurrogateConfig, choose_and_predict, featurize, predict,
                        train_global)
from .thermal import ThermalConfig, max_temperature

log = logging.getLogger(__name__)


@dataclass(frozen=True)
class AnnealConfig:
    decay: float = 0.97
    t_min: float = 1e-5
    granularity: float = 1.0
    inner_iterations: int | None = None  # None: interposer side length in mm
    oracle_budget: int = 4051
    oracle_interleave: int = 5
    global_retrain_period: int = 10
    hot_threshold: float = 85.0
    weight_a_hot: float = 0.9
    seed_samples: int = 120
    max_steps: int | None = None

    def __post_init__(self):
        if not 0 < self.decay < 1:
            raise ValueError("decay must lie in (0, 1)")
        for name in ("oracle_budget", "oracle_interleave", "global_retrain_period"):
            if getattr(self, name) < 1:
                raise ValueError(f"{name} must be at least 1")
        if self.inner_iterations is not None and self.inner_iterations < 1:
            raise ValueError("inner_iterations must be at least 1")
        if self.granularity <= 0:
            raise ValueError("granularity must be positive")


def schedule(cfg: AnnealConfig) -> list[float]:
    """Annealing temperatures of every level, starting at 1."""
    temps = []
    t = 1.0
    while t > cfg.t_min:
        temps.append(t)
        t *= cfg.decay
    return temps


# -- candidate generation --------------------------------------------------

def move_candidate(p: Placement, t_annealing: float, granularity: float,
                   rng: np.random.Generator) -> Placement | None:
    """First legal short translation over random chiplet and direction orders.

    Step length is 1-3 granularity units while hot, one unit once
    ``t_annealing`` drops to 0.1. ``None`` when nothing can move.
    """
    for i in rng.permutation(len(p)):
        for j in rng.permutation(4):
            steps = int(rng.integers(1, 4)) if t_annealing > 0.1 else 1
            q = try_move(p, int(i), DIRECTIONS[j], steps * granularity)
            if q is not None:
                return q
    return None


def jump_candidate(p: Placement, granularity: float, rng: np.random.Generator) -> Placement | None:
    i = int(rng.integers(len(p)))
    rotate = bool(rng.random() < 0.5)
    spots = free_positions(p, i, rotate, granularity)
    if not spots:
        return None
    return try_jump(p, i, spots[int(rng.integers(len(spots)))], rotate)


def jump_ratio(t_annealing: float) -> float:
    return max(0.1, 0.6 * t_annealing)


def jump_or_move(p: Placement, t_annealing: float, cfg: AnnealConfig,
                 rng: np.random.Generator) -> tuple[Placement, str | None]:
    """Return ``(candidate, kind)``; kind is ``"jump"``, ``"move"`` or ``None`` if both failed."""
    if jump_ratio(t_annealing) > rng.random():
        order = ("jump", "move")
    else:
        order = ("move", "jump")
    for kind in order:
        if kind == "jump":
            q = jump_candidate(p, cfg.granularity, rng)
        else:
            q = move_candidate(p, t_annealing, cfg.granularity, rng)
        if q is not None:
            return q, kind
    return p, None


# -- cost ------------------------------------------------------------------

@dataclass
class StageTwoCost:
    t_min: float = math.inf
    t_max: float = -math.inf
    l_min: float = math.inf
    l_max: float = -math.inf

    def update(self, T: float, L: float) -> None:
        self.t_min, self.t_max = min(self.t_min, T), max(self.t_max, T)
        self.l_min, self.l_max = min(self.l_min, L), max(self.l_max, L)


def stage_two_cost(T: float, L: float, extremes: StageTwoCost, a: float) -> float:
    cost = 0.0
    if extremes.t_max > extremes.t_min:
        cost += a * (T - extremes.t_min) / (extremes.t_max - extremes.t_min)
    if extremes.l_max > extremes.l_min:
        cost += (1 - a) * (L - extremes.l_min) / (extremes.l_max - extremes.l_min)
    return cost


def acceptance_probability(cost_current: float, cost_new: float, t_annealing: float) -> float:
    """Metropolis value ``exp(-(new - current) / t)``; above 1 for any improvement."""
    x = (cost_current - cost_new) / t_annealing
    return math.inf if x > 700 else math.exp(x)


# -- the run ---------------------------------------------------------------

class BudgetExhausted(Exception):
    pass


@dataclass
class RunReport:
    seed: int | None
    config: dict
    terminated_by: str = "schedule"
    levels: int = 0
    steps: int = 1
    oracle_calls: int = 0
    seed_samples: int = 0
    local_model_uses: int = 0
    skipped_iterations: int = 0
    initial_temperature: float = float("nan")
    initial_wirelength: float = float("nan")
    final_temperature: float = float("nan")
    final_wirelength: float = float("nan")
    level_best_cost: list[float] = field(default_factory=list)
    best_updates: list[tuple[int, float, float]] = field(default_factory=list)

    def to_dict(self) -> dict:
        return asdict(self)


@dataclass
class StageTwoResult:
    best: Placement
    report: RunReport
    store: SampleStore
    # (step, role) for every oracle call; role is init, seed, new or current
    oracle_log: list[tuple[int, str]]
    accepted: list[Placement] = field(default_factory=list, repr=False)


class StageTwo:
    """One seeded stage-two run; holds the annealing state between steps."""

    def __init__(self, initial: Placement, nets: Sequence[Net], cfg: AnnealConfig = AnnealConfig(),
                 thermal_cfg: ThermalConfig = ThermalConfig(),
                 surrogate_cfg: SurrogateConfig = SurrogateConfig(), seed=None,
                 keep_history: bool = False):
        if not is_legal(initial):
            raise ValueError("initial placement is not legal")
        self.nets = list(nets)
        self.cfg = cfg
        self.thermal_cfg = thermal_cfg
        self.surrogate_cfg = surrogate_cfg
        self.seed = seed
        self.rng = np.random.default_rng(seed)
        self.keep_history = keep_history
        self.inner = cfg.inner_iterations or max(1, int(round(initial.interposer_size)))

        self.count = 0
        self.cache: dict[int, float] = {}
        self.store = SampleStore()
        self.oracle_log: list[tuple[int, str]] = []
        self.extremes = StageTwoCost()

        self.initial = initial
        self.current = self.best = initial
        self.step = self.step_current = 1
        self.t_annealing = 1.0
        self.global_model = None
        self.a = 0.0  # cost weight of the temperature term, refreshed once per level
        self.accepted: list[Placement] = [initial] if keep_history else []

    # oracle bookkeeping

    def _oracle(self, p: Placement, step: int, role: str) -> float:
        if self.count >= self.cfg.oracle_budget:
            raise BudgetExhausted
        T = max_temperature(p, self.thermal_cfg)
        self.count += 1
        self.oracle_log.append((step, role))
        return T

    def weight(self) -> float:
        return self.cfg.weight_a_hot if self.T_best >= self.cfg.hot_threshold else 0.0

    def cost(self, T: float, L: float) -> float:
        return stage_two_cost(T, L, self.extremes, self.a)

    def _seed_store(self) -> int:
        n_seed = min(self.cfg.seed_samples, (self.cfg.oracle_budget - 1) // 2)
        n = len(self.initial)
        for _ in range(n_seed):
            q = self.initial
            for _ in range(int(self.rng.integers(1, 2 * n + 1))):
                q, _kind = jump_or_move(q, 1.0, self.cfg, self.rng)
            T = self._oracle(q, 0, "seed")
            self.store.add(featurize(q), T, routed_length(q, self.nets), 0)
        return n_seed

    def retrain(self) -> None:
        self.global_model = train_global(self.store, self.surrogate_cfg,
                                         seed=int(self.rng.integers(2**32)))

    def evaluate_candidate(self, new: Placement, T_new: float, L_new: float) -> tuple[float, float | None]:
        """Acceptance value of ``new`` and its oracle temperature on interleave steps.

        ``self.step`` must already be the step of ``new``.
        """
        if self.step % self.cfg.oracle_interleave == 0:
            needed = 1 + (self.step_current not in self.cache)
            if self.count + needed > self.cfg.oracle_budget:
                raise BudgetExhausted
            x = featurize(new)
            T_new_hot = self._oracle(new, self.step, "new")
            self.cache[self.step] = T_new_hot
            self.store.add(x, T_new_hot, L_new, self.step)
            if self.step_current in self.cache:
                T_cur_hot = self.cache[self.step_current]
            else:
                T_cur_hot = self._oracle(self.current, self.step_current, "current")
                self.cache[self.step_current] = T_cur_hot
                self.store.add(featurize(self.current), T_cur_hot, self.L_current, self.step_current)
            self.extremes.update(T_cur_hot, self.L_current)
            self.extremes.update(T_new_hot, L_new)
            ap = acceptance_probability(self.cost(T_cur_hot, self.L_current),
                                        self.cost(T_new_hot, L_new), self.t_annealing)
            return ap, T_new_hot
        self.extremes.update(self.T_current, self.L_current)
        self.extremes.update(T_new, L_new)
        ap = acceptance_probability(self.cost(self.T_current, self.L_current),
                                    self.cost(T_new, L_new), self.t_annealing)
        return ap, None

    def run(self) -> StageTwoResult:
        report = RunReport(self.seed, _config_echo(self))
        try:
            self._run(report)
        except BudgetExhausted:
            report.terminated_by = "budget"
        report.steps = self.step
        report.oracle_calls = self.count
        report.final_temperature = self.T_best
        report.final_wirelength = self.L_best
        log.info("stage two: %d steps, %d oracle calls, best %.3f C / %.3f mm",
                 self.step, self.count, self.T_best, self.L_best)
        return StageTwoResult(self.best, report, self.store, self.oracle_log, self.accepted)

    def _run(self, report: RunReport) -> None:
        cfg = self.cfg
        self.L_current = self.L_best = routed_length(self.initial, self.nets)
        self.T_best = self._oracle(self.initial, 1, "init")
        self.cache[1] = self.T_best
        self.store.add(featurize(self.initial), self.T_best, self.L_best, 1)
        report.initial_temperature = self.T_best
        report.initial_wirelength = self.L_best
        report.seed_samples = self._seed_store()
        self.retrain()
        self.T_current = predict(self.global_model, featurize(self.initial))
        self.extremes.update(self.T_best, self.L_best)

        counter = 0
        while self.t_annealing > cfg.t_min:
            self.a = self.weight()
            for _ in range(self.inner):
                if cfg.max_steps is not None and self.step >= cfg.max_steps:
                    report.terminated_by = "max_steps"
                    return
                new, kind = jump_or_move(self.current, self.t_annealing, cfg, self.rng)
                if kind is None:
                    report.skipped_iterations += 1
                    continue
                self.step += 1
                x = featurize(new)
                T_new, used_local = choose_and_predict(self.t_annealing, x, self.global_model,
                                                       self.store, self.rng, self.surrogate_cfg)
                report.local_model_uses += used_local
                L_new = routed_length(new, self.nets)
                ap, T_new_hot = self.evaluate_candidate(new, T_new, L_new)
                if ap > self.rng.random():
                    self.current, self.T_current, self.L_current = new, T_new, L_new
                    self.step_current = self.step
                    if self.keep_history:
                        self.accepted.append(new)
                    if T_new_hot is not None:
                        bap = acceptance_probability(self.cost(self.T_best, self.L_best),
                                                     self.cost(T_new_hot, self.L_current),
                                                     self.t_annealing)
                        if bap > 1:
                            self.best, self.T_best, self.L_best = self.current, T_new_hot, self.L_current
                            report.best_updates.append((self.step, T_new_hot, self.L_current))
                if self.count >= cfg.oracle_budget:
                    raise BudgetExhausted
            self.t_annealing *= cfg.decay
            report.levels += 1
            report.level_best_cost.append(self.cost(self.T_best, self.L_best))
            counter += 1
            if counter >= cfg.global_retrain_period:
                self.retrain()
                counter = 0


def _config_echo(run: StageTwo) -> dict:
    return {
        "anneal": asdict(run.cfg) | {"inner_iterations": run.inner},
        "thermal": asdict(run.thermal_cfg),
        "surrogate": asdict(run.surrogate_cfg),
    }


def run_stage_two(initial: Placement, nets: Sequence[Net], cfg: AnnealConfig = AnnealConfig(),
                  thermal_cfg: ThermalConfig = ThermalConfig(),
                  surrogate_cfg: SurrogateConfig = SurrogateConfig(), seed=None,
                  keep_history: bool = False) -> StageTwoResult:
    return StageTwo(initial, nets, cfg, thermal_cfg, surrogate_cfg, seed, keep_history).run()
