"""
Command-line interface of the simulator.

Exit codes: 0 success, 1 usage or configuration error, 2 data error.
"""

import argparse
import json
import logging
import sys
from dataclasses import replace
from typing import Any, Dict, List, Optional, Sequence

import numpy as np

from hrcache_sim.core.config import SAMPLING_COSTS, SyntheticConfig, load_json_config, load_simulation_config
from hrcache_sim.core.errors import ConfigError, HrCacheError
from hrcache_sim.core.features import FeatureTable, read_training_csv, replay_features, write_training_csv
from hrcache_sim.core.hazard import build_estimator, build_hazard_table, collect_all_durations, synthetic_hazards
from hrcache_sim.core.model import TrainingSet, load_model, predict_batch, save_model, train
from hrcache_sim.core.oracle import calibrate_sampling, full_plan, hro_upper_bound
from hrcache_sim.core.trace import generate_mixed, generate_synthetic, load_trace, trace_stats, write_trace
from hrcache_sim.engine.reports import round_floats, write_report
from hrcache_sim.engine.simulator import compare, run_sim
from hrcache_sim.policies.hrcache import split_windows, window_labels

logger = logging.getLogger(__name__)

EXIT_OK, EXIT_USAGE, EXIT_DATA = 0, 1, 2


class _UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message: str) -> None:
        self.print_usage(sys.stderr)
        raise _UsageError(message)


def _int_list(text: str) -> List[int]:
    try:
        return [int(v) for v in text.split(",") if v]
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected comma-separated integers, got '{text}'") from None


def _float_list(text: str) -> List[float]:
    try:
        return [float(v) for v in text.split(",") if v]
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected comma-separated numbers, got '{text}'") from None


def _add_window_flags(parser: argparse.ArgumentParser) -> None:
    parser.add_argument("--config", help="JSON file with 'window' and 'gbdt' sections")
    parser.add_argument("--window-multiplier", type=float, help="window closes at this many x capacity unique bytes")
    parser.add_argument("--op-budget", type=int, help="labeling work budget per window")
    parser.add_argument("--sampling-cost", choices=list(SAMPLING_COSTS),
                        help="charge sampled keys x window requests (window) or x sampled requests (sampled)")
    parser.add_argument("--batch-size", type=int, help="requests per prediction batch")
    parser.add_argument("--decay", type=float, help="per-request frequency decay factor")
    parser.add_argument("--no-look-back", action="store_true", help="label hits themselves instead of the prior request")
    parser.add_argument("--hazard-mode", choices=["kernel", "poisson"])
    parser.add_argument("--label-mode", choices=["hr_e", "hr_fc"])
    parser.add_argument("--seed", type=int, default=0)


def _configs(args: argparse.Namespace) -> Dict[str, Any]:
    loaded = load_simulation_config(getattr(args, "config", None))
    overrides = {
        "multiplier": getattr(args, "window_multiplier", None),
        "op_budget": getattr(args, "op_budget", None),
        "batch_size": getattr(args, "batch_size", None),
        "decay": getattr(args, "decay", None),
        "hazard_mode": getattr(args, "hazard_mode", None),
        "label_mode": getattr(args, "label_mode", None),
        "sampling_cost": getattr(args, "sampling_cost", None),
    }
    overrides = {k: v for k, v in overrides.items() if v is not None}
    if getattr(args, "no_look_back", False):
        overrides["look_back"] = False
    window = replace(loaded["window"], **overrides)
    window.validate()
    return {"window": window, "gbdt": loaded["gbdt"]}


def _emit(data: Dict[str, Any], output: Optional[str]) -> None:
    if output:
        write_report(data, output)
    else:
        print(json.dumps(round_floats(data), sort_keys=True, indent=2))


def cmd_stats(args: argparse.Namespace) -> None:
    trace = load_trace(args.trace, strict=not args.lenient)
    _emit(trace_stats(trace).to_dict(), args.output)


def cmd_gen(args: argparse.Namespace) -> None:
    data = load_json_config(args.config_file)
    if isinstance(data, dict) and "classes" in data:
        trace = generate_mixed([SyntheticConfig.from_dict(c) for c in data["classes"]])
    else:
        trace = generate_synthetic(SyntheticConfig.from_dict(data))
    write_trace(trace, args.output)
    logger.info(f"Wrote {len(trace)} requests to {args.output}")


def cmd_simulate(args: argparse.Namespace) -> None:
    configs = _configs(args)
    trace = load_trace(args.trace)
    report = run_sim(trace, args.policy, args.capacity, warmup=args.warmup, seed=args.seed,
                     window=configs["window"], gbdt=configs["gbdt"])
    if args.output:
        write_report(report, args.output, include_timing=args.timing)
    else:
        data = report.to_dict(args.timing)
        print(json.dumps(round_floats(data), sort_keys=True, indent=2))


def cmd_compare(args: argparse.Namespace) -> None:
    configs = _configs(args)
    trace = load_trace(args.trace)
    policies = [p for p in args.policies.split(",") if p]
    report = compare(trace, policies, args.capacities, warmup=args.warmup, seed=args.seed,
                     window=configs["window"], gbdt=configs["gbdt"], workers=args.workers)
    if args.output:
        write_report(report, args.output, include_timing=args.timing)
    else:
        print(json.dumps(round_floats(report.to_dict(args.timing)), sort_keys=True, indent=2))


def cmd_bound(args: argparse.Namespace) -> None:
    configs = _configs(args)
    window = configs["window"]
    trace = load_trace(args.trace)
    mode = {"hre": "hr_e", "hrfc": "hr_fc"}.get(args.mode, args.mode)
    if args.synthetic_config:
        data = load_json_config(args.synthetic_config)
        classes = data["classes"] if isinstance(data, dict) and "classes" in data else [data]
        hazards = synthetic_hazards([SyntheticConfig.from_dict(c) for c in classes])
        plan = full_plan(trace)
    else:
        plan = calibrate_sampling(trace, window.op_budget, args.seed, window.sampling_cost)
        hazards = build_hazard_table(trace.times, trace.keys, plan.sampled_keys, mode=window.hazard_mode,
                                     bandwidth_scale=window.bandwidth_scale,
                                     grid_points=window.hazard_grid_points)
    bound = hro_upper_bound(trace, args.capacity, hazards, mode, plan=plan)
    result = bound.to_dict()
    result.update({"mode": mode, "capacity": args.capacity})
    _emit(result, args.output)


def cmd_label_dump(args: argparse.Namespace) -> None:
    configs = _configs(args)
    window = configs["window"]
    trace = load_trace(args.trace)
    training = args.output.lower().endswith(".csv")
    history = FeatureTable(window.decay)
    blocks, labels, lines = [], [], []
    for n, (start, end) in enumerate(split_windows(trace, args.capacity, window.multiplier), start=1):
        part = trace[start:end]
        window_rows = window_labels(part, args.capacity, window, args.seed + n)
        if training:
            if window_rows:
                blocks.append(replay_features(part, window.decay, [r.request_index for r in window_rows], history))
                labels.extend(1 if r.cache_friendly else 0 for r in window_rows)
            # the policy carries this state across window boundaries
            for seq, request in enumerate(part, start=start + 1):
                history.touch(request, seq)
            history.collect_garbage(float(part.times[-1]), float(part.times[-1] - part.times[0]))
            continue
        for r in window_rows:
            record = {
                "index": start + r.request_index,
                "key": int(part.keys[r.request_index]),
                "hro_hit": r.hro_hit,
                "hit_fraction": r.hit_fraction,
                "cache_friendly": r.cache_friendly,
            }
            lines.append(json.dumps(round_floats(record), sort_keys=True))
    if not blocks and not lines:
        raise ConfigError("The trace does not fill a single window at this capacity")
    if training:
        write_training_csv(args.output, np.vstack(blocks), labels)
    else:
        with open(args.output, "w", encoding="utf-8") as f:
            f.writelines(line + "\n" for line in lines)
    logger.info(f"Wrote {len(labels) or len(lines)} labeled requests to {args.output}")


def cmd_train(args: argparse.Namespace) -> None:
    configs = _configs(args)
    params = configs["gbdt"]
    if args.n_trees is not None:
        params = replace(params, n_trees=args.n_trees)
    features, labels = read_training_csv(args.data)
    model = train(TrainingSet(features, labels), params)
    save_model(model, args.output)


def cmd_predict(args: argparse.Namespace) -> None:
    model = load_model(args.model)
    features, labels = read_training_csv(args.data)
    probabilities = predict_batch(model, features)
    result = {
        "rows": int(len(labels)),
        "mean_probability": float(probabilities.mean()) if len(probabilities) else 0.0,
        "accuracy": float(((probabilities > 0.5) == (labels == 1)).mean()) if len(labels) else 0.0,
    }
    if args.probabilities:
        with open(args.probabilities, "w", encoding="utf-8") as f:
            f.writelines(f"{p:.6g}\n" for p in probabilities.tolist())
    _emit(result, args.output)


def cmd_estimate_hazard(args: argparse.Namespace) -> None:
    configs = _configs(args)
    window = configs["window"]
    trace = load_trace(args.trace)
    durations = collect_all_durations(trace.times, trace.keys, [args.key]).get(args.key)
    if durations is None or len(durations) == 0:
        raise ConfigError(f"Key {args.key} has fewer than two requests in the trace")
    estimator = build_estimator(durations, window.hazard_mode, window.bandwidth_scale)
    points = args.points or np.linspace(0.0, float(durations.max()), 11).tolist()
    result = {
        "key": args.key,
        "samples": int(len(durations)),
        "estimator": estimator.to_dict(),
        "rates": [{"t": t, "rate": estimator.evaluate(t)} for t in points],
    }
    _emit(result, args.output)


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="hrcache-sim", description="Trace-driven cache simulation with HR-Cache")
    parser.add_argument("-v", "--verbose", action="store_true", help="debug logging")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("stats", help="summarize a trace")
    p.add_argument("trace")
    p.add_argument("--lenient", action="store_true", help="normalize conflicting sizes instead of failing")
    p.add_argument("-o", "--output")
    p.set_defaults(func=cmd_stats)

    p = sub.add_parser("gen", help="generate a synthetic trace")
    p.add_argument("config_file")
    p.add_argument("-o", "--output", required=True)
    p.set_defaults(func=cmd_gen)

    p = sub.add_parser("simulate", help="replay a trace through one policy")
    p.add_argument("--policy", required=True)
    p.add_argument("--capacity", type=int, required=True)
    p.add_argument("--trace", required=True)
    p.add_argument("--warmup", type=int, help="requests before measurement (default: first window)")
    p.add_argument("--timing", action="store_true", help="include wall_time in the report")
    p.add_argument("-o", "--output")
    _add_window_flags(p)
    p.set_defaults(func=cmd_simulate)

    p = sub.add_parser("compare", help="compare policies against LRU")
    p.add_argument("--policies", required=True, help="comma-separated policy names, lru included")
    p.add_argument("--capacities", type=_int_list, required=True)
    p.add_argument("--trace", required=True)
    p.add_argument("--warmup", type=int)
    p.add_argument("--workers", type=int, default=1)
    p.add_argument("--timing", action="store_true")
    p.add_argument("-o", "--output")
    _add_window_flags(p)
    p.set_defaults(func=cmd_compare)

    p = sub.add_parser("bound", help="hazard rate ordering upper bound")
    p.add_argument("--mode", choices=["hre", "hrfc", "hr_e", "hr_fc"], default="hrfc")
    p.add_argument("--capacity", type=int, required=True)
    p.add_argument("--trace", required=True)
    p.add_argument("--synthetic-config", help="use the generator's true hazards instead of fitted ones")
    p.add_argument("-o", "--output")
    _add_window_flags(p)
    p.set_defaults(func=cmd_bound)

    p = sub.add_parser("label-dump", help="write HRO labels as JSON lines, or training rows to a .csv path")
    p.add_argument("--capacity", type=int, required=True)
    p.add_argument("--trace", required=True)
    p.add_argument("-o", "--output", required=True)
    _add_window_flags(p)
    p.set_defaults(func=cmd_label_dump)

    p = sub.add_parser("train", help="train a model on a label dump")
    p.add_argument("--data", required=True)
    p.add_argument("--n-trees", type=int)
    p.add_argument("--config")
    p.add_argument("-o", "--output", required=True)
    p.set_defaults(func=cmd_train)

    p = sub.add_parser("predict", help="score a label dump with a saved model")
    p.add_argument("--model", required=True)
    p.add_argument("--data", required=True)
    p.add_argument("--probabilities", help="write one probability per row to this file")
    p.add_argument("-o", "--output")
    p.set_defaults(func=cmd_predict)

    p = sub.add_parser("estimate-hazard", help="fit and evaluate one key's hazard")
    p.add_argument("--key", type=int, required=True)
    p.add_argument("--trace", required=True)
    p.add_argument("--points", type=_float_list, help="comma-separated ages to evaluate")
    p.add_argument("-o", "--output")
    _add_window_flags(p)
    p.set_defaults(func=cmd_estimate_hazard)

    return parser


def main(argv: Optional[Sequence[str]] = None) -> int:
    logging.basicConfig(level=logging.INFO, format='%(asctime)s - %(levelname)s - %(message)s')
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except _UsageError as e:
        logger.error(f"Usage error: {e}")
        return EXIT_USAGE
    if args.verbose:
        logging.getLogger().setLevel(logging.DEBUG)
    try:
        args.func(args)
    except ConfigError as e:
        logger.error(f"Configuration error: {e}")
        return EXIT_USAGE
    except (HrCacheError, OSError, KeyError) as e:
        logger.error(f"Data error: {e}")
        return EXIT_DATA
    return EXIT_OK


if __name__ == "__main__":
    sys.exit(main())
