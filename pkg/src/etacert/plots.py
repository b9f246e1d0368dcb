"""Figure rendering for sweep results.

Draws the efficiency-bound curves against the observed violation, one line
per bound present in the rows, with the threshold below which no violation
is possible marked.  Uses the non-interactive backend so it is safe from
scripts and worker processes.
"""

from __future__ import annotations

import matplotlib

matplotlib.use("Agg")

import matplotlib.pyplot as plt

_CURVES = (
    ("eta_qr", "quantum realizations (upper bound)", "tab:blue", "o"),
    ("eta_npa_l2", "level-2 relaxation (certified)", "tab:orange", "s"),
    ("eta_npa_l1ab", "level-1+AB relaxation", "tab:green", "^"),
    ("eta_npa_l1", "level-1 relaxation", "tab:red", "v"),
    ("eta_ns", "no-signaling closed form", "tab:purple", None),
)

ETA_THRESHOLD = 2.0 / 3.0


def render_sweep_figure(rows: list[dict], path: str) -> None:
    """Plot every bound column present in the rows and write the file."""
    fig, ax = plt.subplots(figsize=(7.0, 4.6))
    xs = [row["e_obs"] for row in rows]
    for key, label, color, marker in _CURVES:
        ys = [(row.get(key), x) for row, x in zip(rows, xs)]
        pts = [(x, y) for y, x in ys if y is not None]
        if not pts:
            continue
        px, py = zip(*pts)
        ax.plot(
            px,
            py,
            label=label,
            color=color,
            marker=marker,
            markersize=3.5,
            linewidth=1.2,
        )
    ax.axhline(ETA_THRESHOLD, color="black", linestyle=":", linewidth=1.0,
               label="violation threshold 2/3")
    ax.set_xlabel("observed violation")
    ax.set_ylabel("minimum detector efficiency")
    xi_values = {row.get("xi", 0.0) for row in rows}
    if xi_values:
        xi_text = ", ".join(f"{v:g}" for v in sorted(xi_values))
        ax.set_title(f"Efficiency bounds (dark-count rate {xi_text})")
    ax.legend(loc="lower right", fontsize=8)
    ax.grid(alpha=0.3)
    fig.tight_layout()
    fig.savefig(path, dpi=150)
    plt.close(fig)
