"""Command-line entry points: experiment sweeps, estimator studies, gap reports."""

from __future__ import annotations

import argparse
import json
import sys

import numpy as np

from .benchmark import Bench, BenchConfig
from .channels import NOISE_KINDS, strength_from_fidelity
from .harness import (
    ALGORITHMS,
    METRICS,
    PATH_ONLY_ALGORITHMS,
    ExperimentConfig,
    build_experiment_instance,
    emit_csv,
    run_matrix,
    summarize,
)
from .network import Instance, build_segmented_topology, compute_gaps


def _csv_list(text: str) -> list[str]:
    return [t.strip() for t in text.split(",") if t.strip()]


def _add_run_parser(sub) -> None:
    p = sub.add_parser("run", help="run an experiment sweep and emit a results CSV")
    p.add_argument("--algo", default=None,
                   help="comma list of algorithms (default: all valid for the metric)")
    p.add_argument("--metric", choices=METRICS, default=None)
    p.add_argument("--noise", default=None, help="comma list of noise models")
    p.add_argument("--n", default=None, help="comma list of last-hop link counts")
    p.add_argument("--trials", type=int, default=None)
    p.add_argument("--delta", type=float, default=None)
    p.add_argument("--seed", type=int, default=None)
    p.add_argument("--t0", type=int, default=None,
                   help="override shots per bounce for every algorithm")
    p.add_argument("--bounces", type=int, default=None, help="largest bounce count")
    p.add_argument("--mode", choices=("surrogate", "ptm"), default=None)
    p.add_argument("--samples-per-arm", type=int, default=None)
    p.add_argument("--out", default="results.csv")
    p.add_argument("--trace", default=None,
                   help="directory for per-trial JSON-lines traces")
    p.add_argument("--allow-low-fidelity", action="store_true")
    p.add_argument("--config", default=None,
                   help="JSON file of run options; explicit flags win")


def _add_bench_parser(sub) -> None:
    p = sub.add_parser("bench", help="standalone estimator study on one channel")
    p.add_argument("--p", type=float, default=None,
                   help="true depolarizing parameter (surrogate mode)")
    p.add_argument("--noise", choices=NOISE_KINDS, default=None)
    p.add_argument("--fidelity", type=float, default=None)
    p.add_argument("--t0", type=int, default=10)
    p.add_argument("--bounces", type=int, default=10)
    p.add_argument("--samples", type=int, default=100)
    p.add_argument("--mode", choices=("surrogate", "ptm"), default="surrogate")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--out", default=None, help="CSV path (default: stdout)")


def _add_gaps_parser(sub) -> None:
    p = sub.add_parser("gaps", help="print the gap report of an instance file")
    p.add_argument("instance", help="JSON instance: segments or incidence plus link_p")


def _run_command(args) -> int:
    options = {}
    if args.config:
        with open(args.config, encoding="utf-8") as fh:
            options = json.load(fh)

    def pick(flag_value, key, default):
        # explicit flags beat the config file, which beats built-in defaults
        if flag_value is not None:
            return flag_value
        return options.get(key, default)

    metric = pick(args.metric, "metric", "fidelity")
    algos = args.algo if args.algo is not None else options.get("algos")
    if algos is None:
        algo_list = [a for a in ALGORITHMS
                     if metric == "fidelity" or a not in PATH_ONLY_ALGORITHMS]
    elif isinstance(algos, str):
        algo_list = _csv_list(algos)
    else:
        algo_list = list(algos)

    noise = pick(args.noise, "noise", ",".join(NOISE_KINDS))
    n_vals = pick(args.n, "n", "2,3,4,5,6,7")
    cfg_kwargs = dict(
        algos=tuple(algo_list),
        metric=metric,
        noise_models=tuple(_csv_list(noise) if isinstance(noise, str) else noise),
        n_values=tuple(int(v) for v in
                       (_csv_list(n_vals) if isinstance(n_vals, str) else n_vals)),
        trials=int(pick(args.trials, "trials", 10)),
        delta=float(pick(args.delta, "delta", 0.05)),
        seed=int(pick(args.seed, "seed", 0)),
        mode=pick(args.mode, "mode", "surrogate"),
        bounces=tuple(range(1, int(pick(args.bounces, "bounces", 10)) + 1)),
        samples_per_arm=int(pick(args.samples_per_arm, "samples_per_arm", 20)),
        allow_low_fidelity=bool(args.allow_low_fidelity
                                or options.get("allow_low_fidelity")),
        keep_trace=args.trace is not None,
    )
    t0 = pick(args.t0, "t0", None)
    if t0 is not None:
        cfg_kwargs["t0_adaptive"] = int(t0)
        cfg_kwargs["t0_uniform"] = int(t0)
    cfg = ExperimentConfig(**cfg_kwargs)

    records = run_matrix(cfg)
    if args.trace:
        import os

        os.makedirs(args.trace, exist_ok=True)
        for rec in records:
            if rec.trace is None:
                continue
            name = f"{rec.algo}_{rec.metric}_{rec.noise_model}_n{rec.n}_t{rec.trial}.jsonl"
            with open(os.path.join(args.trace, name), "w", encoding="utf-8") as fh:
                for entry in rec.trace:
                    fh.write(json.dumps(entry) + "\n")
            rec.trace = None
    emit_csv(records, args.out)

    print(f"wrote {len(records)} records to {args.out}")
    for key, cell in summarize(records).items():
        algo, met, noise, n = key
        print(f"{algo:13s} {met:8s} {noise:17s} n={n}  "
              f"cost={cell['mean_cost']:10.1f} +- {cell['se_cost']:8.1f}  "
              f"success={cell['success_rate']:.2f}")
    return 0


def _bench_command(args) -> int:
    if args.p is None and (args.noise is None or args.fidelity is None):
        print("bench needs --p, or --noise together with --fidelity", file=sys.stderr)
        return 2
    if args.p is not None:
        p = args.p
        kind = args.noise
    else:
        kind = args.noise
        model = strength_from_fidelity(kind, args.fidelity)
        # single-link channel realized exactly; its twirl parameter is 2f - 1
        p = 2.0 * args.fidelity - 1.0
        del model
    if args.mode == "ptm" and kind is None:
        print("ptm mode needs --noise and --fidelity", file=sys.stderr)
        return 2

    instance = Instance(build_segmented_topology([1]), np.array([p]))
    cfg = BenchConfig(bounces=tuple(range(1, args.bounces + 1)), t0=args.t0,
                      mode=args.mode)
    bench = Bench(instance, cfg, noise_kind=kind if args.mode == "ptm" else None)
    rng = np.random.default_rng(args.seed)

    lines = ["sample_idx,p_hat,a_hat,cost_units"]
    for i in range(args.samples):
        res = bench.link(0, rng)
        lines.append(f"{i},{res.p_hat:.6f},{res.a_hat:.6f},{res.cost_units}")
    text = "\n".join(lines) + "\n"
    if args.out:
        with open(args.out, "w", encoding="utf-8", newline="\n") as fh:
            fh.write(text)
    else:
        sys.stdout.write(text)
    return 0


def _gaps_command(args) -> int:
    with open(args.instance, encoding="utf-8") as fh:
        instance = Instance.from_json(fh.read())
    report = compute_gaps(instance)
    doc = {
        "best_path": report.best_path,
        "path_gaps": [round(g, 9) for g in report.path_gaps.tolist()],
        "link_gaps": [None if not np.isfinite(g) else round(g, 9)
                      for g in report.link_gaps.tolist()],
    }
    print(json.dumps(doc, indent=2))
    return 0


def main(argv=None) -> int:
    parser = argparse.ArgumentParser(
        prog="bequp",
        description="best-path identification experiments on simulated quantum networks",
    )
    sub = parser.add_subparsers(dest="command", required=True)
    _add_run_parser(sub)
    _add_bench_parser(sub)
    _add_gaps_parser(sub)
    args = parser.parse_args(argv)
    if args.command == "run":
        return _run_command(args)
    if args.command == "bench":
        return _bench_command(args)
    return _gaps_command(args)


if __name__ == "__main__":
    raise SystemExit(main())
