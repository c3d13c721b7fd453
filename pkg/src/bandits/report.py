"""
Report emitters for experiment results: the regret table, runs/trajectory
CSVs, the result JSON and an SVG plot of mean regret with error bars.
"""

import csv
import os
from dataclasses import dataclass, field
from typing import Dict, Optional
from xml.sax.saxutils import escape

import numpy as np

from config import Config, logger
from utils import StructuralError, dump_json, fail, format_sci
from bandits.analysis import scaling_curve
from bandits.harness import ExperimentResult

RUNS_FIELDS = ["policy", "run", "T", "final_regret", "seconds"]
TRAJECTORY_FIELDS = ["policy", "run", "t", "regret"]
PALETTE = ["#1f77b4", "#d62728", "#2ca02c", "#ff7f0e", "#9467bd", "#8c564b", "#e377c2", "#17becf"]


def render_table(result: ExperimentResult) -> str:
    """Policies in descending order of mean Reg(T): name, mean ± std, mean seconds."""
    summaries = sorted(result.summaries(), key=lambda s: -s.mean)
    width = max(len("Algorithm"), *(len(s.policy) for s in summaries))
    lines = [
        f"L={result.L}  K={result.K}  T={result.T}  runs={result.runs}"
        + (f"  min gap={result.min_gap:.4g}" if result.min_gap is not None else ""),
        f"{'Algorithm':<{width}}  Reg(T) mean ± std         Seconds",
    ]
    for s in summaries:
        lines.append(f"{s.policy:<{width}}  {format_sci(s.mean)} ± {format_sci(s.std)}  {format_sci(s.mean_seconds)}")
    return "\n".join(lines) + "\n"


def write_runs_csv(result: ExperimentResult, path: str) -> str:
    with open(path, "w", newline="", encoding="utf-8") as f:
        writer = csv.DictWriter(f, fieldnames=RUNS_FIELDS)
        writer.writeheader()
        for r in result.records:
            writer.writerow({"policy": r.policy, "run": r.run, "T": r.T,
                             "final_regret": repr(r.final_regret), "seconds": f"{r.seconds:.6f}"})
    return path


def write_trajectories_csv(result: ExperimentResult, path: str) -> str:
    with open(path, "w", newline="", encoding="utf-8") as f:
        writer = csv.DictWriter(f, fieldnames=TRAJECTORY_FIELDS)
        writer.writeheader()
        for r in result.records:
            for t, regret in r.trajectory:
                writer.writerow({"policy": r.policy, "run": r.run, "t": t, "regret": repr(regret)})
    return path


def _num(value: float) -> str:
    return f"{value:.{Config.SVG_SIG_DIGITS}g}"


def emit_plot(result: ExperimentResult, path: str, scale: float = Config.ERROR_BAR_SCALE,
              width: int = 800, height: int = 500, reference: bool = False) -> str:
    """
    One polyline of mean regret per policy; each checkpoint carries an error
    bar of half-length scale * std / sqrt(runs). With reference=True a dashed
    sqrt(KLT) ln T curve is anchored to the first policy at its first checkpoint t >= 2.
    """
    curves = []
    for label in result.labels:
        steps, mean, std = result.mean_trajectory(label)
        if steps.size == 0:
            fail(StructuralError, f"Empty trajectory for {label}")
        curves.append((label, steps, mean, scale * std / np.sqrt(result.runs)))
    ref = None
    if reference:
        _, steps, mean, _ = curves[0]
        usable = steps >= 2
        if usable.any():
            ref = (steps[usable], scaling_curve(result.K, result.L, steps[usable], anchor=float(mean[usable][0])))
    margin = {"left": 80, "right": 180, "top": 40, "bottom": 50}
    plot_w = width - margin["left"] - margin["right"]
    plot_h = height - margin["top"] - margin["bottom"]
    x_max = float(max(c[1][-1] for c in curves))
    y_max = float(max(np.max(c[2] + c[3]) for c in curves))
    if ref is not None:
        y_max = max(y_max, float(ref[1].max()))
    y_max = y_max or 1.0

    def px(t):
        return margin["left"] + plot_w * t / x_max

    def py(r):
        return margin["top"] + plot_h * (1.0 - r / y_max)

    svg = f'<svg width="{width}" height="{height}" xmlns="http://www.w3.org/2000/svg">\n'
    svg += f'  <rect x="0" y="0" width="{width}" height="{height}" fill="white"/>\n'
    svg += (f'  <text x="{_num(margin["left"] + plot_w / 2)}" y="24" text-anchor="middle" font-size="16">'
            f'Cumulative regret (L={result.L}, K={result.K}, {result.runs} runs)</text>\n')
    x0, y0 = margin["left"], margin["top"] + plot_h
    svg += f'  <line x1="{x0}" y1="{y0}" x2="{x0 + plot_w}" y2="{y0}" stroke="#333"/>\n'
    svg += f'  <line x1="{x0}" y1="{margin["top"]}" x2="{x0}" y2="{y0}" stroke="#333"/>\n'
    for frac in (0.0, 0.25, 0.5, 0.75, 1.0):
        svg += (f'  <text x="{_num(px(frac * x_max))}" y="{y0 + 20}" text-anchor="middle" font-size="11" '
                f'fill="#666">{_num(frac * x_max)}</text>\n')
        svg += (f'  <text x="{x0 - 8}" y="{_num(py(frac * y_max) + 4)}" text-anchor="end" font-size="11" '
                f'fill="#666">{_num(frac * y_max)}</text>\n')
    svg += f'  <text x="{_num(x0 + plot_w / 2)}" y="{height - 10}" text-anchor="middle" font-size="12">t</text>\n'
    for k, (label, steps, mean, bar) in enumerate(curves):
        color = PALETTE[k % len(PALETTE)]
        points = " ".join(f"{_num(px(t))},{_num(py(m))}" for t, m in zip(steps, mean))
        svg += (f'  <polyline fill="none" stroke="{color}" stroke-width="1.5" points="{points}" '
                f'data-policy="{escape(label)}" data-final-mean="{repr(float(mean[-1]))}"/>\n')
        for t, m, b in zip(steps, mean, bar):
            svg += (f'  <line x1="{_num(px(t))}" y1="{_num(py(m - b))}" x2="{_num(px(t))}" y2="{_num(py(m + b))}" '
                    f'stroke="{color}" stroke-width="0.8" class="error-bar"/>\n')
        ly = margin["top"] + 20 * (k + 1)
        lx = width - margin["right"] + 15
        svg += f'  <line x1="{lx}" y1="{ly - 4}" x2="{lx + 20}" y2="{ly - 4}" stroke="{color}" stroke-width="2"/>\n'
        svg += f'  <text x="{lx + 26}" y="{ly}" font-size="12" fill="#333">{escape(label)}</text>\n'
    if ref is not None:
        points = " ".join(f"{_num(px(t))},{_num(py(r))}" for t, r in zip(*ref))
        svg += (f'  <polyline fill="none" stroke="#888" stroke-width="1" stroke-dasharray="4 3" '
                f'points="{points}" class="reference"/>\n')
        ly = margin["top"] + 20 * (len(curves) + 1)
        lx = width - margin["right"] + 15
        svg += (f'  <line x1="{lx}" y1="{ly - 4}" x2="{lx + 20}" y2="{ly - 4}" stroke="#888" '
                f'stroke-dasharray="4 3"/>\n')
        svg += f'  <text x="{lx + 26}" y="{ly}" font-size="12" fill="#333">sqrt(KLT) ln T</text>\n'
    svg += '</svg>\n'
    os.makedirs(os.path.dirname(os.path.abspath(path)), exist_ok=True)
    with open(path, "w", encoding="utf-8") as f:
        f.write(svg)
    return path


@dataclass
class ReportArtifacts:
    table: str
    paths: Dict[str, str] = field(default_factory=dict)


def emit_report(result: ExperimentResult, out_dir: Optional[str] = None,
                scale: Optional[float] = None) -> ReportArtifacts:
    """Render the table and, when out_dir is given, write every artifact there."""
    if not result.records:
        fail(StructuralError, "Cannot report an empty result")
    table = render_table(result)
    artifacts = ReportArtifacts(table=table)
    if out_dir is None:
        return artifacts
    os.makedirs(out_dir, exist_ok=True)
    if scale is None:
        scale = float(result.config.get("error_bar_scale", Config.ERROR_BAR_SCALE))
    artifacts.paths["result"] = dump_json(result.to_dict(), os.path.join(out_dir, "result.json"))
    artifacts.paths["runs"] = write_runs_csv(result, os.path.join(out_dir, "runs.csv"))
    artifacts.paths["trajectories"] = write_trajectories_csv(result, os.path.join(out_dir, "trajectories.csv"))
    report_path = os.path.join(out_dir, "report.txt")
    with open(report_path, "w", encoding="utf-8") as f:
        f.write(table)
    artifacts.paths["report"] = report_path
    artifacts.paths["plot"] = emit_plot(result, os.path.join(out_dir, "regret.svg"), scale=scale,
                                        reference=bool(result.config.get("reference_curve", False)))
    for name, path in artifacts.paths.items():
        logger.info(f"Wrote {name}: {path}")
    return artifacts
