"""Figure output: gnuplot scripts and matplotlib renderings from result CSVs.

Both paths first reduce the CSV to a small table of series means, so a
script only has to draw lines from a whitespace-separated data file.
"""

from __future__ import annotations

import math
from collections import defaultdict
from dataclasses import dataclass
from pathlib import Path
from typing import Dict, List, Sequence, Tuple

from .metrics import read_csv


@dataclass(frozen=True)
class FigureKind:
    x: str
    y: str
    xlabel: str
    ylabel: str
    title: str


FIGURES: Dict[str, FigureKind] = {
    "fig2": FigureKind("turn", "avg_quality", "turn", "average quality", "Average contract quality per turn"),
    "fig3": FigureKind("turn", "good_sellers_discovered", "turn", "good sellers discovered",
                       "Good sellers discovered per turn"),
    "fig4": FigureKind("turn", "idk_count", "turn", "I-don't-know answers", "I-don't-know answers per turn"),
    "fig5": FigureKind("cheater_fraction", "steady_quality", "cheater fraction", "steady-state quality",
                       "Steady-state quality against cheater fraction"),
}


class PlotError(ValueError):
    pass


def figure_kind(kind: str) -> FigureKind:
    try:
        return FIGURES[kind]
    except KeyError:
        raise PlotError(f"unknown plot kind {kind!r}; valid kinds: {', '.join(sorted(FIGURES))}") from None


def series_means(csv_path, kind: str) -> Tuple[List[str], List[Tuple[float, List[float]]]]:
    """Average ``y`` over seeds for every (series, x).

    Series come from the ``level`` column; a plain per-turn CSV has a
    single series called ``run``.  Returns the series names and rows of
    ``(x, [mean per series])`` sorted by x, with NaN for missing cells.
    """
    fig = figure_kind(kind)
    path = Path(csv_path)
    if not path.is_file():
        raise FileNotFoundError(f"no such CSV: {path}")
    rows = read_csv(path)
    if rows and (fig.x not in rows[0] or fig.y not in rows[0]):
        raise PlotError(f"{path} has no {fig.x}/{fig.y} columns for {kind}")
    acc: Dict[Tuple[str, float], List[float]] = defaultdict(list)
    for r in rows:
        acc[(r.get("level", "run"), float(r[fig.x]))].append(float(r[fig.y]))
    names = sorted({s for s, _ in acc})
    xs = sorted({x for _, x in acc})
    table = []
    for x in xs:
        ys = [acc.get((s, x)) for s in names]
        table.append((x, [math.fsum(v) / len(v) if v else float("nan") for v in ys]))
    return names, table


def _write_table(path: Path, names: Sequence[str], table) -> None:
    lines = ["# x " + " ".join(names)]
    for x, ys in table:
        lines.append(" ".join([f"{x:g}"] + [f"{y:.6f}" for y in ys]))
    path.write_text("\n".join(lines) + "\n")


def emit_plot_script(csv_path, kind: str, out_dir=None) -> Path:
    """Write ``<kind>.gp`` and its data file ``<kind>.dat``.

    Running ``gnuplot <kind>.gp`` in the output directory produces
    ``<kind>.png``.
    """
    fig = figure_kind(kind)
    names, table = series_means(csv_path, kind)
    out = Path(out_dir) if out_dir is not None else Path(csv_path).parent
    try:
        out.mkdir(parents=True, exist_ok=True)
        data = out / f"{kind}.dat"
        _write_table(data, names, table)
        plots = ", ".join(
            f"'{data.name}' using 1:{i + 2} with linespoints title '{name}'"
            for i, name in enumerate(names)
        )
        script = out / f"{kind}.gp"
        script.write_text(
            "set terminal pngcairo size 800,500\n"
            f"set output '{kind}.png'\n"
            f"set title \"{fig.title}\"\n"
            f"set xlabel \"{fig.xlabel}\"\n"
            f"set ylabel \"{fig.ylabel}\"\n"
            "set key outside right\n"
            "set grid\n"
            f"plot {plots}\n"
        )
    except OSError as exc:
        raise OSError(f"cannot write plot files in {out}: {exc.strerror or exc}") from exc
    return script


def render_figure(csv_path, kind: str, out_path) -> Path:
    """Render the figure straight to an image file with matplotlib."""
    import matplotlib

    matplotlib.use("Agg")
    import matplotlib.pyplot as plt

    fig_kind = figure_kind(kind)
    names, table = series_means(csv_path, kind)
    fig, ax = plt.subplots(figsize=(7, 4.2))
    xs = [x for x, _ in table]
    for i, name in enumerate(names):
        ax.plot(xs, [ys[i] for _, ys in table], marker="o" if kind == "fig5" else None,
                markersize=3, linewidth=1.2, label=name)
    ax.set_xlabel(fig_kind.xlabel)
    ax.set_ylabel(fig_kind.ylabel)
    ax.set_title(fig_kind.title)
    ax.grid(alpha=0.3)
    ax.legend(frameon=False)
    fig.tight_layout()
    out_path = Path(out_path)
    try:
        out_path.parent.mkdir(parents=True, exist_ok=True)
        # fixed metadata keeps repeated renders byte-identical
        fig.savefig(out_path, dpi=120, metadata={"Software": None})
    except OSError as exc:
        raise OSError(f"cannot write {out_path}: {exc.strerror or exc}") from exc
    finally:
        plt.close(fig)
    return out_path
