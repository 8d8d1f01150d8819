"""Figure presets: canned sweeps that reproduce the headline experiments,
scaled between desk runs (minutes) and the full protocol (hours) with one
knob.

At scale 1.0 a preset runs 100 seeds of 10-minute simulations per point;
`scale` multiplies both the seed count and the duration (duration is
floored at 180 s so the 60 s warm-up never swallows a run).
"""
from __future__ import annotations

import math
from dataclasses import dataclass, replace
from pathlib import Path

import numpy as np

from .charts import Panel, Series, multi_panel_chart
from .coordination import LayerConfig, TargetScheme
from .engine import Scenario, SweepSpec, aggregate_rows, run_sweep
from .metrics import write_metrics_csv

FULL_SEEDS = 100
FULL_DURATION_S = 600.0
MIN_DURATION_S = 180.0

#: arena sides for the density axis with 100 agents (mean free path 15-60 m)
DENSITY_SIDES = (150.0, 200.0, 275.0, 400.0, 600.0)


def scaled(scale: float) -> tuple[int, float]:
    if not 0.0 < scale <= 1.0:
        raise ValueError(f"scale must be in (0, 1], got {scale}")
    seeds = max(1, round(FULL_SEEDS * scale))
    duration = max(MIN_DURATION_S, FULL_DURATION_S * scale)
    return seeds, duration


def _base(seed: int, duration: float, no_interactions: bool = False) -> Scenario:
    return Scenario(
        n_agents=100,
        scheme=TargetScheme.square(275.0),
        desired_speed=8.0,
        duration_s=duration,
        seed=seed,
        no_interactions=no_interactions,
    )


@dataclass(frozen=True)
class FigurePreset:
    name: str
    description: str

    def sweeps(self, scale: float, seed: int, no_interactions: bool) -> list[tuple[str, SweepSpec]]:
        seeds, duration = scaled(scale)
        base = _base(seed, duration, no_interactions)
        if self.name == "fig2_density":
            return [("", SweepSpec(base, "arena_size", DENSITY_SIDES, seeds))]
        if self.name == "fig3_hierarchy":
            return [("", SweepSpec(replace(base, n_agents=50,
                                           scheme=TargetScheme.square(27.5 * math.sqrt(50))),
                                   "priority", ("egalitarian", "full"), seeds,
                                   collect_per_rank=True))]
        if self.name == "fig4_layers":
            out = []
            for n_layers in (1, 3, 5):
                layered = replace(base, layers=LayerConfig(n_layers=n_layers))
                out.append((f"layers={n_layers}",
                            SweepSpec(layered, "arena_size", DENSITY_SIDES, seeds)))
            return out
        if self.name == "scalability":
            return [("", SweepSpec(base, "agent_count", (100, 400, 1000), seeds))]
        raise ValueError(f"unknown preset {self.name!r}")


PRESETS = {
    "fig2_density": FigurePreset(
        "fig2_density",
        "traffic flow of 100 agents vs density (square arena, side 150-600 m)"),
    "fig3_hierarchy": FigurePreset(
        "fig3_hierarchy",
        "per-rank effective velocity, egalitarian vs full hierarchy"),
    "fig4_layers": FigurePreset(
        "fig4_layers",
        "fundamental diagrams for 1, 3 and 5 traffic layers"),
    "scalability": FigurePreset(
        "scalability",
        "traffic statistics at fixed density for growing fleet sizes"),
}


def _mfp(side: float, n: int) -> float:
    return side / math.sqrt(n)


def _diagram_panels(label_rows: list[tuple[str, list[dict]]], x_of_point) -> list[Panel]:
    panels = [
        Panel("effective velocity", "m/s"),
        Panel("throughput", "1/s"),
        Panel("collision risk", "-", log_y=True),
    ]
    for li, (label, aggs) in enumerate(label_rows):
        aggs = sorted(aggs, key=lambda a: x_of_point(a["point"]))
        xs = [x_of_point(a["point"]) for a in aggs]
        for panel, key in zip(panels, ("v_eff", "throughput", "collision_risk")):
            panel.series.append(Series(
                name=label or key,
                x=xs,
                y=[a.get(f"{key}_mean", float("nan")) for a in aggs],
                yerr=[a.get(f"{key}_sd", 0.0) for a in aggs],
            ))
    return panels


def run_figure(name: str, scale: float, out_dir, parallelism: int | None = None,
               seed: int = 0, no_interactions: bool = False) -> dict[str, str]:
    """Run a preset and write its runs CSV, per-point CSV and SVG chart."""
    if name not in PRESETS:
        raise KeyError(f"unknown figure preset {name!r}; options: {', '.join(sorted(PRESETS))}")
    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    preset = PRESETS[name]
    sweeps = preset.sweeps(scale, seed, no_interactions)

    all_rows: list[dict] = []
    label_rows: list[tuple[str, list[dict]]] = []
    per_rank: dict[str, dict[int, list[float]]] = {}
    for label, spec in sweeps:
        keep_rank = spec.collect_per_rank
        rows = run_sweep(replace(spec, collect_per_rank=keep_rank), parallelism)
        for row in rows:
            ranks = row.pop("_per_rank", None)
            if keep_rank and ranks is not None and row.get("status") == "ok":
                bucket = per_rank.setdefault(str(row["point"]), {})
                for r, v in ranks.items():
                    bucket.setdefault(int(r), []).append(float(v))
            if label:
                row["variant"] = label
            all_rows.append(row)
        label_rows.append((label, aggregate_rows(rows)))

    runs_csv = out_dir / f"{name}_runs.csv"
    write_metrics_csv(runs_csv, all_rows)

    points_csv = out_dir / f"{name}_points.csv"
    chart_svg = out_dir / f"{name}.svg"

    if name == "fig3_hierarchy":
        point_rows = []
        panels = [Panel("per-rank effective velocity", "m/s")]
        for variant in sorted(per_rank):
            ranks = sorted(per_rank[variant])
            means = [float(np.mean(per_rank[variant][r])) for r in ranks]
            sds = [float(np.std(per_rank[variant][r], ddof=1)) if len(per_rank[variant][r]) > 1 else 0.0
                   for r in ranks]
            for r, m, s in zip(ranks, means, sds):
                point_rows.append({"variant": variant, "rank": r,
                                   "v_eff_mean": m, "v_eff_sd": s})
            panels[0].series.append(Series(name=variant, x=list(ranks), y=means, yerr=sds))
        write_metrics_csv(points_csv, point_rows)
        multi_panel_chart(chart_svg, panels, "agent rank",
                          "Effective velocity by rank")
    else:
        point_rows = []
        for label, aggs in label_rows:
            for agg in aggs:
                row = dict(agg)
                if label:
                    row["variant"] = label
                point_rows.append(row)
        write_metrics_csv(points_csv, point_rows)
        if name == "scalability":
            panels = _diagram_panels(label_rows, x_of_point=float)
            x_label = "fleet size N (mean free path fixed at 27.5 m)"
        else:
            n = 100
            panels = _diagram_panels(label_rows, x_of_point=lambda p: _mfp(float(p), n))
            x_label = "mean free path L/sqrt(N), m"
        multi_panel_chart(chart_svg, panels, x_label, PRESETS[name].description)

    return {"runs": str(runs_csv), "points": str(points_csv), "chart": str(chart_svg)}
