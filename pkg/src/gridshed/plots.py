"""Figure rendering for the report path.

Each study that writes a CSV also renders a matching PNG next to it.  All
figures use the Agg backend so they work headless.
"""

import matplotlib

matplotlib.use("Agg")

import matplotlib.pyplot as plt

from .problem import OBJECTIVE_LABELS, Objective

_DPI = 150


def sweep_figure(path, result):
    """Served share versus accepted risk threshold (step curve)."""
    fig, ax = plt.subplots(figsize=(6.5, 4.0))
    ts = [row.threshold for row in result.rows]
    served = [row.served_pct for row in result.rows]
    risk = [row.risk_pct for row in result.rows]
    ax.step(ts, served, where="post", lw=1.8, label="served %")
    ax.step(ts, risk, where="post", lw=1.2, ls="--", color="firebrick", label="risk of solution %")
    ax.set_xlabel("accepted wildfire risk threshold")
    ax.set_ylabel("percent of total")
    ax.set_title(f"{OBJECTIVE_LABELS[result.objective]} / {result.regime.value} microgrids")
    ax.set_ylim(-2, 105)
    ax.grid(alpha=0.3)
    ax.legend(loc="lower right")
    fig.tight_layout()
    fig.savefig(path, dpi=_DPI)
    plt.close(fig)


def priority_figure(path, table):
    """Grouped bars: sweep steps energized per block under each objective."""
    fig, ax = plt.subplots(figsize=(6.5, 4.0))
    blocks = list(table.block_ids)
    width = 0.27
    for k, obj in enumerate(Objective):
        xs = [i + (k - 1) * width for i in range(len(blocks))]
        ys = [table.counts[obj][b] for b in blocks]
        ax.bar(xs, ys, width=width, label=obj.value)
        for x, y, b in zip(xs, ys, blocks):
            ax.annotate(
                str(table.ranks[obj][b]),
                (x, y),
                ha="center",
                va="bottom",
                fontsize=7,
            )
    ax.set_xticks(range(len(blocks)))
    ax.set_xticklabels([f"block {b}" for b in blocks])
    ax.set_ylabel("sweep steps energized")
    ax.set_title("shutoff priority (bar label = rank)")
    ax.grid(axis="y", alpha=0.3)
    ax.legend()
    fig.tight_layout()
    fig.savefig(path, dpi=_DPI)
    plt.close(fig)


def compare_figure(path, rows, objective):
    """Served and risk percentages per controllability regime."""
    fig, ax = plt.subplots(figsize=(6.0, 4.0))
    labels = [r.regime.value for r in rows]
    xs = range(len(rows))
    ax.bar([x - 0.18 for x in xs], [r.served_pct for r in rows], width=0.36, label="served %")
    ax.bar(
        [x + 0.18 for x in xs],
        [r.risk_pct for r in rows],
        width=0.36,
        color="firebrick",
        label="risk %",
    )
    ax.set_xticks(list(xs))
    ax.set_xticklabels(labels)
    ax.set_ylabel("percent of total")
    ax.set_title(f"controllability comparison ({OBJECTIVE_LABELS[Objective(objective)]})")
    ax.set_ylim(0, 105)
    ax.grid(axis="y", alpha=0.3)
    ax.legend()
    fig.tight_layout()
    fig.savefig(path, dpi=_DPI)
    plt.close(fig)


def solution_figure(path, bg, config):
    """Per-block demand bars colored by energization, risk annotated."""
    fig, ax = plt.subplots(figsize=(6.5, 4.0))
    blocks = list(bg.blocks)
    xs = range(len(blocks))
    colors = [
        "forestgreen" if blk.id in config.energized_blocks else "lightgray"
        for blk in blocks
    ]
    ax.bar(xs, [blk.total_pd for blk in blocks], color=colors)
    for x, blk in zip(xs, blocks):
        ax.annotate(
            f"rho={blk.risk:g}\nv={blk.total_svi:g}",
            (x, blk.total_pd),
            ha="center",
            va="bottom",
            fontsize=7,
        )
    ax.set_xticks(list(xs))
    ax.set_xticklabels([f"block {blk.id}" for blk in blocks])
    ax.set_ylabel("demand (kW)")
    closed = ", ".join(config.closed_switches) or "none"
    ax.set_title(
        f"energized blocks (green); closed switches: {closed}; "
        f"risk {100 * config.risk_fraction:.1f}%"
    )
    fig.tight_layout()
    fig.savefig(path, dpi=_DPI)
    plt.close(fig)
