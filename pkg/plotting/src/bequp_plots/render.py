"""Figure rendering: cost-vs-path-count panels per noise model."""

from __future__ import annotations

from dataclasses import dataclass

import matplotlib

matplotlib.use("Agg")

import matplotlib.pyplot as plt

from .aggregate import aggregate, legend_order, load_records, noise_panels, select_metric

# fixed style per known algorithm so lines match across panels and figures
_STYLES = {
    "bequp-link": dict(color="#1f77b4", marker="o"),
    "bequp-path": dict(color="#d62728", marker="s"),
    "succ-elim": dict(color="#2ca02c", marker="^"),
    "linkselfie": dict(color="#9467bd", marker="v"),
    "uniform-link": dict(color="#ff7f0e", marker="D"),
    "uniform-path": dict(color="#8c564b", marker="x"),
}
_FALLBACK_COLORS = ("#7f7f7f", "#bcbd22", "#17becf")


@dataclass(frozen=True)
class PlotSpec:
    input_csv: str
    metric: str = "fidelity"
    output: str = "figure.png"
    logy: bool = False


def _style_for(algo: str, index: int) -> dict:
    if algo in _STYLES:
        return _STYLES[algo]
    return dict(color=_FALLBACK_COLORS[index % len(_FALLBACK_COLORS)], marker=".")


def build_figure(spec: PlotSpec):
    """Build the figure described by ``spec`` without writing it."""
    df = select_metric(load_records(spec.input_csv), spec.metric)
    agg = aggregate(df)
    panels = noise_panels(agg)
    order = legend_order(agg)

    ncols = 2 if len(panels) > 1 else 1
    nrows = (len(panels) + ncols - 1) // ncols
    fig, axes = plt.subplots(nrows, ncols, figsize=(5.5 * ncols, 4.0 * nrows),
                             squeeze=False, sharex=True)
    flat = axes.ravel()
    for ax in flat[len(panels):]:
        ax.set_visible(False)

    for ax, noise in zip(flat, panels):
        sub = agg[agg["noise_model"] == noise]
        for idx, algo in enumerate(order):
            line = sub[sub["algo"] == algo]
            if line.empty:
                continue
            ax.errorbar(line["K"], line["mean_cost"], yerr=line["se_cost"],
                        label=algo, capsize=3, linewidth=1.5,
                        **_style_for(algo, idx))
        if spec.logy:
            ax.set_yscale("log")
        ax.set_title(noise.replace("_", " "))
        ax.set_xlabel("number of paths K")
        ax.set_ylabel("quantum resource cost")
        ax.grid(True, alpha=0.3)

    handles, labels = flat[0].get_legend_handles_labels()
    if not handles:
        for ax in flat[:len(panels)]:
            handles, labels = ax.get_legend_handles_labels()
            if handles:
                break
    fig.legend(handles, labels, loc="upper center", ncol=min(len(labels), 6),
               frameon=False, bbox_to_anchor=(0.5, 1.0))
    fig.tight_layout(rect=(0, 0, 1, 0.93))
    return fig


def render(spec: PlotSpec) -> str:
    """Render the figure described by ``spec``; returns the output path."""
    fig = build_figure(spec)
    fig.savefig(spec.output, dpi=150)
    plt.close(fig)
    return spec.output
