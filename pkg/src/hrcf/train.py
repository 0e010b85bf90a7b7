"""End-to-end training loop, ablation drivers, and run records."""

import dataclasses
import json
import time
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .encoder import EmbeddingTable, init_embeddings, save_checkpoint
from .errors import ConfigError, DataError, NumericAbort
from .evaluate import EvalResult, evaluate, format_metrics_line
from .graph import InteractionGraph
from .objective import LossReport, forward_embeddings, loss_and_grad, reg_loss, sample_triplets
from .optim import OptimizerState, RiemannianSGD


@dataclass
class TrainConfig:
    """All hyperparameters of a run; nothing else affects the result."""

    dim: int = 50
    layers: int = 3
    margin: float = 0.15
    reg_lambda: float = 20.0
    learning_rate: float = 0.001
    weight_decay: float = 5e-4
    epochs: int = 500
    batch_size: int = 4096
    init_sigma: float = 0.1
    include_layer0: bool = False
    seed: int = 42
    eval_ks: tuple[int, ...] = (10, 20)
    eval_every: int = 10
    head_fraction: float | None = 0.2
    reproducible: bool = False
    exact_manifold_step: bool = False

    def validate(self) -> None:
        checks = [
            (self.dim >= 2, "dim must be >= 2"),
            (self.layers >= 1, "layers must be >= 1"),
            (self.margin > 0, "margin must be > 0"),
            (self.reg_lambda >= 0, "lambda must be >= 0"),
            (self.learning_rate > 0, "lr must be > 0"),
            (self.weight_decay >= 0, "weight decay must be >= 0"),
            (self.epochs >= 0, "epochs must be >= 0"),
            (self.batch_size >= 1, "batch_size must be >= 1"),
            (self.init_sigma >= 0, "init_sigma must be >= 0"),
            (self.eval_every >= 1, "eval_every must be >= 1"),
            (len(self.eval_ks) > 0 and all(k >= 1 for k in self.eval_ks), "eval_ks must be positive"),
            (self.head_fraction is None or 0.0 < self.head_fraction < 1.0,
             "head_fraction must be in (0, 1) or unset"),
        ]
        for ok, message in checks:
            if not ok:
                raise ConfigError(message)

    def to_dict(self) -> dict:
        out = dataclasses.asdict(self)
        out["eval_ks"] = list(self.eval_ks)
        return out


@dataclass
class RunRecord:
    """Config snapshot plus per-epoch losses and per-eval metrics."""

    config: TrainConfig
    loss_reports: list[LossReport] = field(default_factory=list)
    wall_clock_s: list[float] = field(default_factory=list)
    eval_epochs: list[int] = field(default_factory=list)
    eval_results: list[EvalResult] = field(default_factory=list)
    final_mean_sq_norm: float = 0.0

    @property
    def final_eval(self) -> EvalResult:
        return self.eval_results[-1]


def _metrics_record(epoch: int, report: LossReport, result: EvalResult, wall: float) -> dict:
    rec = {
        "epoch": epoch,
        "margin_loss": report.margin_loss,
        "reg_loss": report.reg_loss,
        "total_loss": report.total,
        "x_norm": report.mean_sq_norm,
        "wall_clock_s": wall,
    }
    for k, v in result.recall_at.items():
        rec[f"R@{k}"] = v
    for k, v in result.ndcg_at.items():
        rec[f"N@{k}"] = v
    for name, seg in (result.per_segment or {}).items():
        for k, v in seg.recall_at.items():
            rec[f"{name}:R@{k}"] = v
        for k, v in seg.ndcg_at.items():
            rec[f"{name}:N@{k}"] = v
    return rec


def _mean_report(reports: list[LossReport]) -> LossReport:
    return LossReport(
        margin_loss=float(np.mean([r.margin_loss for r in reports])),
        reg_loss=float(np.mean([r.reg_loss for r in reports])),
        total=float(np.mean([r.total for r in reports])),
        mean_sq_norm=float(np.mean([r.mean_sq_norm for r in reports])),
    )


def train(
    graph: InteractionGraph,
    config: TrainConfig,
    out_dir: Path | str | None = None,
    log=None,
):
    """Run the full optimization loop; returns (RunRecord, EmbeddingTable).

    Every epoch resamples one uniform negative per train positive and sweeps
    the shuffled triplets in batches. Evaluation runs every `eval_every`
    epochs and at the final epoch; each evaluation appends a record to
    ``<out_dir>/metrics.jsonl`` and refreshes ``<out_dir>/checkpoint.txt``,
    so an abort always leaves the last good checkpoint on disk. A non-finite
    loss aborts with a diagnostic dump of the offending batch.
    """
    config.validate()
    if len(graph.train_edges) == 0:
        raise DataError("empty train split")
    out_path = Path(out_dir) if out_dir is not None else None
    metrics_file = None
    if out_path is not None:
        out_path.mkdir(parents=True, exist_ok=True)
        (out_path / "config.json").write_text(json.dumps(config.to_dict(), indent=2, sort_keys=True))
        metrics_file = out_path / "metrics.jsonl"
        metrics_file.write_text("")

    init_seed, sample_seed = np.random.SeedSequence(config.seed).spawn(2)
    table = init_embeddings(graph.num_users, graph.num_items, config.dim, config.init_sigma, init_seed)
    optimizer = RiemannianSGD(
        OptimizerState(config.learning_rate, config.weight_decay),
        exact_manifold_step=config.exact_manifold_step,
    )
    rng = np.random.default_rng(sample_seed)
    record = RunRecord(config=config)

    def run_eval(epoch: int, report: LossReport, wall: float) -> None:
        output = forward_embeddings(graph, table, config.layers, config.include_layer0)
        result = evaluate(graph, output, config.eval_ks, config.head_fraction)
        record.eval_epochs.append(epoch)
        record.eval_results.append(result)
        if log is not None:
            log(format_metrics_line(epoch, result))
        if out_path is not None:
            with open(metrics_file, "a", encoding="utf-8") as fh:
                fh.write(json.dumps(_metrics_record(epoch, report, result, wall), sort_keys=True) + "\n")
            save_checkpoint(table, out_path / "checkpoint.txt")

    if config.epochs == 0:
        batch = sample_triplets(graph, rng)
        report, _, _ = loss_and_grad(
            graph, table, config.layers, config.margin, config.reg_lambda,
            batch, config.include_layer0,
        )
        run_eval(0, report, 0.0)
        record.final_mean_sq_norm = report.mean_sq_norm
        return record, table

    for epoch in range(1, config.epochs + 1):
        started = time.perf_counter()
        triplets = sample_triplets(graph, rng)
        order = rng.permutation(len(triplets))
        batch_reports = []
        for start in range(0, len(order), config.batch_size):
            batch = triplets.slice(order[start:start + config.batch_size])
            report, user_grad, item_grad = loss_and_grad(
                graph, table, config.layers, config.margin, config.reg_lambda,
                batch, config.include_layer0,
            )
            if not np.isfinite(report.total):
                _dump_abort(out_path, epoch, start // config.batch_size, batch)
                raise NumericAbort(
                    f"non-finite loss at epoch {epoch}", epoch, start // config.batch_size,
                    indices=batch.users[:16].tolist(),
                )
            optimizer.step(table, user_grad, item_grad)
            batch_reports.append(report)
        wall = 0.0 if config.reproducible else time.perf_counter() - started
        epoch_report = _mean_report(batch_reports)
        record.loss_reports.append(epoch_report)
        record.wall_clock_s.append(wall)
        if epoch % config.eval_every == 0 or epoch == config.epochs:
            run_eval(epoch, epoch_report, wall)

    final = forward_embeddings(graph, table, config.layers, config.include_layer0)
    record.final_mean_sq_norm = reg_loss(final.stacked_tangent())[0]
    return record, table


def _dump_abort(out_path: Path | None, epoch: int, batch_index: int, batch) -> None:
    if out_path is None:
        return
    dump = {
        "epoch": epoch,
        "batch": batch_index,
        "users": batch.users[:32].tolist(),
        "pos_items": batch.pos_items[:32].tolist(),
        "neg_items": batch.neg_items[:32].tolist(),
    }
    (out_path / "abort.json").write_text(json.dumps(dump, indent=2))


def ablate_orders(graph: InteractionGraph, config: TrainConfig, orders) -> dict[int, RunRecord]:
    """Train one model per aggregation order with everything else fixed."""
    orders = [int(o) for o in orders]
    if any(o < 1 or o > 12 for o in orders):
        raise ConfigError(f"orders must lie in [1, 12], got {orders}")
    results = {}
    for order in orders:
        cfg = dataclasses.replace(config, layers=order)
        record, _ = train(graph, cfg)
        results[order] = record
    return results


def ablate_lambdas(graph: InteractionGraph, config: TrainConfig, lambdas) -> dict[float, RunRecord]:
    """Train one model per regularization weight with everything else fixed."""
    lambdas = [float(v) for v in lambdas]
    if any(v < 0 for v in lambdas):
        raise ConfigError(f"lambdas must be >= 0, got {lambdas}")
    results = {}
    for lam in lambdas:
        cfg = dataclasses.replace(config, reg_lambda=lam)
        record, _ = train(graph, cfg)
        results[lam] = record
    return results
