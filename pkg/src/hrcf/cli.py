"""Command-line interface.

Subcommands: train, eval, ablate-orders, ablate-lambda, synth, verify.
Exit codes: 0 success, 1 config error, 2 data error, 3 numeric abort,
4 oracle failure.

A flat ``key = value`` config file can prefill any train flag (long names
with underscores, e.g. ``lambda = 20``); explicit flags override the file.
"""

import argparse
import json
import sys
from pathlib import Path

from . import figures, oracles
from .encoder import load_checkpoint
from .errors import ConfigError, DataError, HrcfError, NumericAbort
from .evaluate import evaluate, format_metrics_line
from .graph import (
    InteractionRecord,
    SyntheticGraphSpec,
    generate_synthetic,
    load_interactions,
    split_and_index,
)
from .objective import forward_embeddings
from .train import TrainConfig, ablate_lambdas, ablate_orders, train


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise ConfigError(message)


def _parse_bool(text: str) -> bool:
    lowered = text.strip().lower()
    if lowered in ("1", "true", "yes", "on"):
        return True
    if lowered in ("0", "false", "no", "off"):
        return False
    raise ConfigError(f"expected a boolean, got {text!r}")


def _parse_int_list(text: str) -> tuple[int, ...]:
    try:
        return tuple(int(v) for v in str(text).replace(",", " ").split())
    except ValueError:
        raise ConfigError(f"expected a comma-separated integer list, got {text!r}") from None


def _parse_float_list(text: str) -> tuple[float, ...]:
    try:
        return tuple(float(v) for v in str(text).replace(",", " ").split())
    except ValueError:
        raise ConfigError(f"expected a comma-separated number list, got {text!r}") from None


# config-file key -> (TrainConfig field, parser)
_CONFIG_KEYS = {
    "dim": ("dim", int),
    "layers": ("layers", int),
    "margin": ("margin", float),
    "lambda": ("reg_lambda", float),
    "lr": ("learning_rate", float),
    "wd": ("weight_decay", float),
    "epochs": ("epochs", int),
    "batch_size": ("batch_size", int),
    "init_sigma": ("init_sigma", float),
    "include_layer0": ("include_layer0", _parse_bool),
    "seed": ("seed", int),
    "eval_ks": ("eval_ks", _parse_int_list),
    "eval_every": ("eval_every", int),
    "head_fraction": ("head_fraction", float),
    "reproducible": ("reproducible", _parse_bool),
    "exact_manifold_step": ("exact_manifold_step", _parse_bool),
}
_SOURCE_KEYS = ("data", "synth", "threshold", "train_fraction", "out")


def read_config_file(path) -> dict:
    """Parse ``key = value`` lines; ``#`` starts a comment."""
    values = {}
    for line_number, raw in enumerate(Path(path).read_text(encoding="utf-8").splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ConfigError(f"{path}:{line_number}: expected key = value, got {raw!r}")
        key, value = (part.strip() for part in line.split("=", 1))
        if key not in _CONFIG_KEYS and key not in _SOURCE_KEYS:
            raise ConfigError(f"{path}:{line_number}: unknown key {key!r}")
        values[key] = value
    return values


def _add_source_args(parser) -> None:
    parser.add_argument("--data", help="interaction file (user<TAB>item<TAB>rating[<TAB>ts])")
    parser.add_argument("--synth", help="synthetic spec, e.g. users=2000,items=1500,exponent=2.0,mean_degree=12,seed=7")
    parser.add_argument("--threshold", type=float, default=None, help="rating binarization threshold (default 4.0)")
    parser.add_argument("--train-fraction", type=float, default=None, help="per-user train share (default 0.8)")
    parser.add_argument("--config", help="flat key = value config file; flags override it")


def _add_train_args(parser) -> None:
    parser.add_argument("--dim", type=int)
    parser.add_argument("--layers", type=int)
    parser.add_argument("--margin", type=float)
    parser.add_argument("--lambda", dest="reg_lambda", type=float)
    parser.add_argument("--lr", type=float)
    parser.add_argument("--wd", type=float)
    parser.add_argument("--epochs", type=int)
    parser.add_argument("--batch-size", type=int)
    parser.add_argument("--init-sigma", type=float)
    parser.add_argument("--include-layer0", action="store_const", const=True, default=None)
    parser.add_argument("--seed", type=int)
    parser.add_argument("--eval-ks", type=str)
    parser.add_argument("--eval-every", type=int)
    parser.add_argument("--head-fraction", type=float)
    parser.add_argument("--reproducible", action="store_const", const=True, default=None)
    parser.add_argument("--exact-manifold-step", action="store_const", const=True, default=None)
    parser.add_argument("--out", help="output directory for metrics, checkpoint, figures")


def build_config(args, file_values: dict) -> TrainConfig:
    config = TrainConfig()
    for key, (attr, parse) in _CONFIG_KEYS.items():
        if key in file_values:
            setattr(config, attr, parse(file_values[key]))
    for attr in (spec[0] for spec in _CONFIG_KEYS.values()):
        flag_value = getattr(args, attr, None)
        if flag_value is not None:
            if attr == "eval_ks":
                flag_value = _parse_int_list(flag_value)
            setattr(config, attr, flag_value)
    config.validate()
    return config


def parse_synth_spec(text: str) -> SyntheticGraphSpec:
    values = {}
    for part in text.split(","):
        if not part.strip():
            continue
        if "=" not in part:
            raise ConfigError(f"synthetic spec entries must be key=value, got {part!r}")
        key, value = (p.strip() for p in part.split("=", 1))
        values[key] = value
    try:
        spec = SyntheticGraphSpec(
            num_users=int(values.pop("users")),
            num_items=int(values.pop("items")),
            power_law_exponent=float(values.pop("exponent", 2.0)),
            mean_degree=float(values.pop("mean_degree", 10.0)),
            seed=int(values.pop("seed", 0)),
        )
    except KeyError as missing:
        raise ConfigError(f"synthetic spec is missing {missing}") from None
    except ValueError as bad:
        raise ConfigError(f"bad synthetic spec value: {bad}") from None
    if values:
        raise ConfigError(f"unknown synthetic spec keys: {sorted(values)}")
    return spec


def _resolve_records(args, file_values: dict) -> list[InteractionRecord]:
    data = args.data if args.data is not None else file_values.get("data")
    synth = args.synth if args.synth is not None else file_values.get("synth")
    if data and synth:
        raise ConfigError("give either --data or --synth, not both")
    threshold = args.threshold
    if threshold is None:
        threshold = float(file_values.get("threshold", 4.0))
    if data:
        return load_interactions(data, threshold)
    if synth:
        spec = parse_synth_spec(synth)
        spec.validate()
        return generate_synthetic(spec)
    raise ConfigError("a data source is required: --data or --synth")


def _resolve_graph(args, file_values: dict, seed: int):
    records = _resolve_records(args, file_values)
    fraction = args.train_fraction
    if fraction is None:
        fraction = float(file_values.get("train_fraction", 0.8))
    return split_and_index(records, fraction, seed)


def _print_ablation_table(results: dict, key_name: str, out_dir: Path | None, stem: str) -> None:
    ks = sorted(next(iter(results.values())).final_eval.recall_at)
    header = [key_name] + [f"R@{k}" for k in ks] + [f"N@{k}" for k in ks] + ["x_norm"]
    rows = [header]
    for key in sorted(results):
        final = results[key].final_eval
        rows.append(
            [f"{key:g}"]
            + [f"{final.recall_at[k]:.6f}" for k in ks]
            + [f"{final.ndcg_at[k]:.6f}" for k in ks]
            + [f"{results[key].final_mean_sq_norm:.6f}"]
        )
    table = "\n".join("\t".join(row) for row in rows)
    print(table)
    if out_dir is not None:
        out_dir.mkdir(parents=True, exist_ok=True)
        (out_dir / f"{stem}.tsv").write_text(table + "\n")
        figures.save_ablation_curve(results, out_dir / f"{stem}.png", xlabel=key_name)


def _cmd_train(args) -> int:
    file_values = read_config_file(args.config) if args.config else {}
    config = build_config(args, file_values)
    out = args.out if args.out is not None else file_values.get("out")
    graph = _resolve_graph(args, file_values, config.seed)
    record, _ = train(graph, config, out_dir=out, log=print)
    if out is not None:
        figures.save_training_curves(record, Path(out) / "training_curves.png")
        print(f"wrote metrics, checkpoint, and figures to {out}")
    return 0


def _cmd_eval(args) -> int:
    file_values = read_config_file(args.config) if args.config else {}
    config = build_config(args, file_values)
    graph = _resolve_graph(args, file_values, config.seed)
    table = load_checkpoint(args.checkpoint)
    if table.user_params.shape[0] != graph.num_users or table.item_params.shape[0] != graph.num_items:
        raise DataError(
            f"checkpoint covers {table.user_params.shape[0]} users / "
            f"{table.item_params.shape[0]} items but the graph has "
            f"{graph.num_users} / {graph.num_items}"
        )
    output = forward_embeddings(graph, table, config.layers, config.include_layer0)
    result = evaluate(graph, output, config.eval_ks, config.head_fraction)
    print(format_metrics_line(args.epoch, result))
    if args.out:
        out_dir = Path(args.out)
        out_dir.mkdir(parents=True, exist_ok=True)
        rec = {"epoch": args.epoch}
        for k, v in result.recall_at.items():
            rec[f"R@{k}"] = v
        for k, v in result.ndcg_at.items():
            rec[f"N@{k}"] = v
        (out_dir / "eval.json").write_text(json.dumps(rec, indent=2, sort_keys=True))
    return 0


def _cmd_ablate_orders(args) -> int:
    file_values = read_config_file(args.config) if args.config else {}
    config = build_config(args, file_values)
    graph = _resolve_graph(args, file_values, config.seed)
    orders = _parse_int_list(args.orders)
    results = ablate_orders(graph, config, orders)
    out = Path(args.out) if args.out else None
    _print_ablation_table(results, "order", out, "ablate_orders")
    return 0


def _cmd_ablate_lambda(args) -> int:
    file_values = read_config_file(args.config) if args.config else {}
    config = build_config(args, file_values)
    graph = _resolve_graph(args, file_values, config.seed)
    lambdas = _parse_float_list(args.lambdas)
    results = ablate_lambdas(graph, config, lambdas)
    out = Path(args.out) if args.out else None
    _print_ablation_table(results, "lambda", out, "ablate_lambda")
    return 0


def _cmd_synth(args) -> int:
    spec = SyntheticGraphSpec(
        num_users=args.users,
        num_items=args.items,
        power_law_exponent=args.exponent,
        mean_degree=args.mean_degree,
        seed=args.seed,
    )
    records = generate_synthetic(spec)
    with open(args.out, "w", encoding="utf-8") as fh:
        fh.write(f"# synthetic interactions: users={spec.num_users} items={spec.num_items} "
                 f"exponent={spec.power_law_exponent} mean_degree={spec.mean_degree} seed={spec.seed}\n")
        for r in records:
            fh.write(f"{r.user_id}\t{r.item_id}\t{r.rating:g}\n")
    print(f"wrote {len(records)} interactions to {args.out}")
    return 0


def _cmd_verify(args) -> int:
    checks = oracles.run_all(seed=args.seed)
    lines = [check.line() for check in checks]
    for line in lines:
        print(line)
    report_dir = Path(args.out) if args.out else None
    if report_dir is not None:
        report_dir.mkdir(parents=True, exist_ok=True)
        (report_dir / "verify.txt").write_text("\n".join(lines) + "\n")
        figures.save_distance_ratio_curve(report_dir / "distance_ratio.png")
    if all(check.passed for check in checks):
        print("all oracle checks passed")
        return 0
    print("oracle checks FAILED", file=sys.stderr)
    return 4


def build_parser() -> _Parser:
    parser = _Parser(prog="hrcf", description=__doc__)
    sub = parser.add_subparsers(dest="command", required=True)

    p_train = sub.add_parser("train", help="train a model and log metrics")
    _add_source_args(p_train)
    _add_train_args(p_train)
    p_train.set_defaults(func=_cmd_train)

    p_eval = sub.add_parser("eval", help="evaluate a checkpoint")
    _add_source_args(p_eval)
    _add_train_args(p_eval)
    p_eval.add_argument("--checkpoint", required=True)
    p_eval.add_argument("--epoch", type=int, default=0, help="epoch label for the output line")
    p_eval.set_defaults(func=_cmd_eval)

    p_orders = sub.add_parser("ablate-orders", help="sweep the aggregation order")
    _add_source_args(p_orders)
    _add_train_args(p_orders)
    p_orders.add_argument("--orders", required=True, help="comma-separated orders, e.g. 2,4,8")
    p_orders.set_defaults(func=_cmd_ablate_orders)

    p_lambda = sub.add_parser("ablate-lambda", help="sweep the regularization weight")
    _add_source_args(p_lambda)
    _add_train_args(p_lambda)
    p_lambda.add_argument("--lambdas", required=True, help="comma-separated weights, e.g. 0,10,20")
    p_lambda.set_defaults(func=_cmd_ablate_lambda)

    p_synth = sub.add_parser("synth", help="write a synthetic interaction file")
    p_synth.add_argument("--users", type=int, required=True)
    p_synth.add_argument("--items", type=int, required=True)
    p_synth.add_argument("--exponent", type=float, default=2.0)
    p_synth.add_argument("--mean-degree", type=float, default=10.0)
    p_synth.add_argument("--seed", type=int, default=0)
    p_synth.add_argument("--out", required=True)
    p_synth.set_defaults(func=_cmd_synth)

    p_verify = sub.add_parser("verify", help="run the oracle suite")
    p_verify.add_argument("--seed", type=int, default=0)
    p_verify.add_argument("--out", help="directory for the report and diagnostic figure")
    p_verify.set_defaults(func=_cmd_verify)

    return parser


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
        return args.func(args)
    except ConfigError as err:
        print(f"config error: {err}", file=sys.stderr)
        return 1
    except DataError as err:
        print(f"data error: {err}", file=sys.stderr)
        return 2
    except NumericAbort as err:
        print(f"numeric abort: {err} (epoch {err.epoch}, batch {err.batch})", file=sys.stderr)
        return 3
    except HrcfError as err:
        print(f"error: {err}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
