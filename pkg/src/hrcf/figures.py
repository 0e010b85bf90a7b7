"""Matplotlib report rendering for the CLI (headless Agg backend)."""

import numpy as np

import matplotlib

matplotlib.use("Agg")
import matplotlib.pyplot as plt  # noqa: E402

from .manifold import distance_ratio_diagnostic  # noqa: E402


def save_training_curves(record, path) -> None:
    """Loss components per epoch and ranking metrics per evaluation."""
    fig, (ax_loss, ax_metric) = plt.subplots(1, 2, figsize=(11, 4))
    epochs = np.arange(1, len(record.loss_reports) + 1)
    if len(epochs):
        ax_loss.plot(epochs, [r.margin_loss for r in record.loss_reports], label="margin")
        lam = record.config.reg_lambda
        ax_loss.plot(epochs, [lam * r.reg_loss for r in record.loss_reports],
                     label=f"{lam:g} x reg")
        ax_loss.plot(epochs, [r.total for r in record.loss_reports], label="total", ls="--")
    ax_loss.set_xlabel("epoch")
    ax_loss.set_ylabel("loss")
    ax_loss.legend()
    ax_loss.set_title("training loss")

    for k in record.config.eval_ks:
        ax_metric.plot(record.eval_epochs, [r.recall_at[k] for r in record.eval_results],
                       marker="o", label=f"Recall@{k}")
        ax_metric.plot(record.eval_epochs, [r.ndcg_at[k] for r in record.eval_results],
                       marker="s", ls="--", label=f"NDCG@{k}")
    ax_metric.set_xlabel("epoch")
    ax_metric.set_ylabel("metric")
    ax_metric.legend()
    ax_metric.set_title("ranking metrics")
    fig.tight_layout()
    fig.savefig(path, dpi=150)
    plt.close(fig)


def save_ablation_curve(results: dict, path, xlabel: str, metric_k: int = 10) -> None:
    """Recall/NDCG at one cutoff against the swept parameter."""
    xs = sorted(results)
    recall = [results[x].final_eval.recall_at[metric_k] for x in xs]
    ndcg = [results[x].final_eval.ndcg_at[metric_k] for x in xs]
    fig, ax = plt.subplots(figsize=(6, 4))
    ax.plot(xs, recall, marker="o", label=f"Recall@{metric_k}")
    ax.plot(xs, ndcg, marker="s", label=f"NDCG@{metric_k}")
    ax.set_xlabel(xlabel)
    ax.set_ylabel("metric")
    ax.legend()
    ax.set_title(f"ablation over {xlabel}")
    fig.tight_layout()
    fig.savefig(path, dpi=150)
    plt.close(fig)


def save_distance_ratio_curve(path, radii=None, angles=(np.pi / 4, np.pi / 2, np.pi)) -> None:
    """The spread-ratio diagnostic against the radius, one curve per angle."""
    radii = np.arange(1, 11) if radii is None else np.asarray(radii)
    fig, ax = plt.subplots(figsize=(6, 4))
    for angle in angles:
        values = [distance_ratio_diagnostic(float(a), float(angle)) for a in radii]
        ax.plot(radii, values, marker="o", label=f"angle {angle / np.pi:.2f}π")
    ax.axhline(1.0, color="grey", lw=0.8, ls=":")
    ax.set_xlabel("tangent radius")
    ax.set_ylabel("d(x, y) / (d(x, o) + d(y, o))")
    ax.legend()
    ax.set_title("distance ratio vs. radius")
    fig.tight_layout()
    fig.savefig(path, dpi=150)
    plt.close(fig)
