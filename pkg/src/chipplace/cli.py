"""Command-line entry point: ``chipplace {place,thermal,wirelength,surrogate-eval}``."""

from __future__ import annotations

import argparse
import logging
import sys
import time
from pathlib import Path

import numpy as np

from .annealer import run_stage_two
from .initial_placement import Infeasible, StageOneConfig, run_stage_one
from .netlist import hpwl, route_wirelength
from .surrogate import SampleStore, SurrogateConfig, default_k, select_global_training_set, train
from .system import (ParseError, ValidationError, dumps_json, parse_spec, read_placement,
                     write_placement)
from .thermal import NonConvergence, ThermalConfig, thermal_map, write_csv, write_pgm

EXIT_OK, EXIT_INPUT, EXIT_INFEASIBLE, EXIT_SOLVER = 0, 2, 3, 4

log = logging.getLogger("chipplace")


def _write_thermal(tmap, cfg: ThermalConfig, out: Path, stem: str = "thermal") -> None:
    write_csv(tmap, out / f"{stem}.csv")
    write_pgm(tmap, out / f"{stem}.pgm", cfg.ambient)


def cmd_place(args) -> int:
    spec = parse_spec(args.spec)
    overrides = {}
    if args.budget is not None:
        overrides["oracle_budget"] = args.budget
    if args.decay is not None:
        overrides["decay"] = args.decay
    if args.granularity is not None:
        overrides["granularity"] = args.granularity
    anneal_cfg = spec.anneal_config(**overrides)
    thermal_cfg = spec.thermal_config(**({"grid_resolution": args.resolution} if args.resolution else {}))
    out = Path(args.out_dir)
    out.mkdir(parents=True, exist_ok=True)
    nets = spec.nets()
    rng = np.random.default_rng(args.seed)
    stage_one_seed, stage_two_seed = (int(s) for s in rng.integers(2**32, size=2))
    t0 = time.perf_counter()

    if args.stage == "two":
        if not args.initial:
            raise ParseError("--stage two needs --initial PLACEMENT")
        spec_in, initial = read_placement(args.initial)
        spec = spec_in
        nets = spec.nets()
    else:
        s1 = run_stage_one(spec.chiplet_objects(), nets, spec.interposer_size,
                           StageOneConfig(), stage_one_seed)
        initial = s1.placement
        log.info("stage one: cost %.4f (initial %.4f), HPWL %.2f", s1.cost, s1.initial_cost,
                 hpwl(initial, nets))
        if args.stage == "one":
            write_placement(spec, initial, out / "placement.json")
            print(f"stage one placement written to {out / 'placement.json'}")
            return EXIT_OK

    result = run_stage_two(initial, nets, anneal_cfg, thermal_cfg, SurrogateConfig(), stage_two_seed)
    best = result.best
    write_placement(spec, best, out / "placement.json")
    report = result.report.to_dict()
    report["seed"] = args.seed
    (out / "report.json").write_text(dumps_json(report))
    tmap = thermal_map(best, thermal_cfg)
    _write_thermal(tmap, thermal_cfg, out)
    if args.emit_samples:
        result.store.save_csv(out / "samples.csv")
    elapsed = time.perf_counter() - t0
    (out / "timing.json").write_text(dumps_json({"wall_clock_s": elapsed}))
    r = result.report
    print(f"max temperature {r.final_temperature:.3f} C (initial {r.initial_temperature:.3f} C)")
    print(f"routed wirelength {r.final_wirelength:.3f} mm (initial {r.initial_wirelength:.3f} mm)")
    print(f"oracle calls {r.oracle_calls}/{anneal_cfg.oracle_budget}, steps {r.steps}, "
          f"{elapsed:.1f} s")
    return EXIT_OK


def cmd_thermal(args) -> int:
    spec, p = read_placement(args.placement)
    cfg = spec.thermal_config(**({"grid_resolution": args.resolution} if args.resolution else {}))
    tmap = thermal_map(p, cfg)
    out = Path(args.out_dir)
    out.mkdir(parents=True, exist_ok=True)
    _write_thermal(tmap, cfg, out)
    print(round(tmap.max_temp, 6))
    return EXIT_OK


def cmd_wirelength(args) -> int:
    spec, p = read_placement(args.placement)
    nets = spec.nets()
    print(f"hpwl {hpwl(p, nets):.6g}")
    print(f"routed {route_wirelength(p, nets).total_wirelength:.6g}")
    return EXIT_OK


def cross_validate(store: SampleStore, folds: int = 5, seed=0, k: int | None = None,
                   cfg: SurrogateConfig = SurrogateConfig()) -> list[float]:
    """Per-fold held-out RMSE of the global model."""
    n = len(store)
    if n < folds:
        raise ValueError(f"{n} samples cannot be split into {folds} folds")
    rng = np.random.default_rng(seed)
    order = rng.permutation(n)
    X, T = store.X, store.T
    rmses = []
    for f, test in enumerate(np.array_split(order, folds)):
        train_idx = np.setdiff1d(order, test)
        sub = SampleStore()
        for i in train_idx:
            s = store.samples[i]
            sub.add(s.features, s.temperature, s.wirelength, s.step)
        sel = select_global_training_set(sub, cfg.per_bin)
        kk = k if k is not None else default_k(len(sel), cfg.k_cap)
        model = train(sub.X[sel], sub.T[sel], kk, int(rng.integers(2**32)), cfg.width_rule,
                      normalize=cfg.normalize)
        err = model.predict_many(X[test]) - T[test]
        rmses.append(float(np.sqrt(np.mean(err ** 2))))
    return rmses


def cmd_surrogate_eval(args) -> int:
    store = SampleStore.load_csv(args.samples)
    cfg = SurrogateConfig(per_bin=args.per_bin)
    rmses = cross_validate(store, args.folds, args.seed, args.k, cfg)
    T = store.T
    span = T.max() - T.min()
    print(f"{'fold':>6} {'rmse':>12}")
    for f, r in enumerate(rmses):
        print(f"{f:>6} {r:>12.6g}")
    mean = float(np.mean(rmses))
    print(f"{'mean':>6} {mean:>12.6g}")
    rel = mean / span if span > 0 else 0.0
    print(f"{'range':>6} {span:>12.6g}  (mean rmse = {100 * rel:.2f}% of range)")
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="chipplace", description="Thermal-aware chiplet placement")
    ap.add_argument("-v", "--verbose", action="store_true")
    sub = ap.add_subparsers(dest="command", required=True)

    p = sub.add_parser("place", help="run the placement pipeline")
    p.add_argument("spec")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--stage", choices=("one", "two", "full"), default="full")
    p.add_argument("--initial", help="starting placement for --stage two")
    p.add_argument("--budget", type=int)
    p.add_argument("--decay", type=float)
    p.add_argument("--granularity", type=float)
    p.add_argument("--resolution", type=int)
    p.add_argument("--out-dir", default=".")
    p.add_argument("--emit-samples", action="store_true")
    p.set_defaults(func=cmd_place)

    p = sub.add_parser("thermal", help="evaluate a placement with the thermal solver")
    p.add_argument("placement")
    p.add_argument("--resolution", type=int)
    p.add_argument("--out-dir", default=".")
    p.set_defaults(func=cmd_thermal)

    p = sub.add_parser("wirelength", help="report HPWL and routed wirelength")
    p.add_argument("placement")
    p.set_defaults(func=cmd_wirelength)

    p = sub.add_parser("surrogate-eval", help="cross-validate the surrogate on a sample archive")
    p.add_argument("samples")
    p.add_argument("--folds", type=int, default=5)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--k", type=int)
    p.add_argument("--per-bin", type=int, default=40)
    p.set_defaults(func=cmd_surrogate_eval)
    return ap


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        return args.func(args)
    except (ParseError, ValidationError) as e:
        print(f"error: {e}", file=sys.stderr)
        return EXIT_INPUT
    except Infeasible as e:
        print(f"infeasible: {e}", file=sys.stderr)
        return EXIT_INFEASIBLE
    except NonConvergence as e:
        print(f"thermal solver failed: {e}", file=sys.stderr)
        return EXIT_SOLVER
    except ValueError as e:
        # bad numeric settings or too few samples
        print(f"error: {e}", file=sys.stderr)
        return EXIT_INPUT


if __name__ == "__main__":
    sys.exit(main())
