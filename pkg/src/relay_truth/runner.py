"""Experiment orchestration: subcommand dispatch, CSV and report emission.

Each subcommand writes ``<name>.<subcommand>.csv`` with deterministic body
(byte-identical for identical scenario + seed + samples) and a structured
``<name>.report.json``. Curve CSVs carry the header ``report,relay_id,value``
(for fig6/fig7 the second column holds K instead of a relay id); fig8 and
optimal-k use ``k,secrecy_rate,sample``; fig3d uses ``true_rate,report,value``.
"""

from __future__ import annotations

import csv
import io
import json
import time
from dataclasses import dataclass, field
from pathlib import Path
from typing import Dict, List, Tuple

import numpy as np
import yaml

from . import __version__
from .analysis import PropertyVerdict, check_property, truth_vs_k_scan
from .mechanisms import agv_transfer, expected_curves, selection_curve_stats
from .scenario import Scenario, serialize
from .selection import optimal_k_selection, secrecy_vs_k_sweep

SUBCOMMANDS = (
    "fig2", "fig3", "fig4", "fig5", "fig3d", "fig6", "fig7", "fig8",
    "verify", "optimal-k",
)

CURVE_HEADER = ("report", "relay_id", "value")
SWEEP_HEADER = ("k", "secrecy_rate", "sample")
SURFACE_HEADER = ("true_rate", "report", "value")


class UsageError(ValueError):
    """Subcommand/scenario mismatch."""


@dataclass
class RunReport:
    """Everything one run produced, recomputable from scenario + seed."""

    scenario: Dict
    subcommand: str
    csv_header: Tuple[str, ...]
    csv_rows: List[Tuple]
    results: Dict = field(default_factory=dict)
    verdicts: List[PropertyVerdict] = field(default_factory=list)
    wall_time_s: float = 0.0

    @property
    def ok(self) -> bool:
        return all(v.holds for v in self.verdicts)

    def csv_body(self) -> str:
        buf = io.StringIO()
        writer = csv.writer(buf, lineterminator="\n")
        writer.writerow(self.csv_header)
        for row in self.csv_rows:
            writer.writerow([_fmt(v) for v in row])
        return buf.getvalue()

    def to_json(self) -> str:
        payload = {
            "scenario": self.scenario,
            "subcommand": self.subcommand,
            "results": self.results,
            "verdicts": [v.to_dict() for v in self.verdicts],
            "provenance": {
                "tool_version": __version__,
                "seed": self.scenario.get("mc", {}).get("seed"),
                "samples": self.scenario.get("mc", {}).get("samples"),
                "wall_time_s": self.wall_time_s,
            },
        }
        return json.dumps(payload, indent=2, sort_keys=True)


def _fmt(v) -> str:
    if isinstance(v, str):
        return v
    if isinstance(v, (int, np.integer)):
        return str(int(v))
    return format(float(v), ".12g")


def _curve_rows(curves: Dict[int, Dict[str, np.ndarray]]) -> List[Tuple]:
    rows = []
    for key in sorted(curves):
        c = curves[key]
        for r, v in zip(c["report"], c["values"]):
            rows.append((float(r), int(key), float(v)))
    return rows


def _fixed_k_context(scenario: Scenario):
    if scenario.k == "auto":
        raise UsageError("this subcommand needs a fixed integer k, not 'auto'")
    spec = scenario.game_spec()
    grid = np.asarray(scenario.grid.points())
    return spec, grid, scenario.mc


def _payoff_or_transfer(
    scenario: Scenario, mechanism: str, field_name: str
) -> Dict[int, Dict[str, np.ndarray]]:
    spec, grid, cfg = _fixed_k_context(scenario)
    curves = {}
    for i in range(1, spec.n + 1):
        c = expected_curves(spec, mechanism, i, grid, cfg)
        curves[i] = {"report": c["report"], "values": c[field_name]}
    return curves


def _run_fig2(scenario: Scenario) -> Tuple[List[Tuple], Dict]:
    curves = _payoff_or_transfer(scenario, "vcg-expected", "payoff")
    return _curve_rows(curves), {}


def _run_fig3(scenario: Scenario) -> Tuple[List[Tuple], Dict]:
    curves = _payoff_or_transfer(scenario, "vcg-expected", "transfer")
    return _curve_rows(curves), {}


def _run_fig4(scenario: Scenario) -> Tuple[List[Tuple], Dict]:
    curves = _payoff_or_transfer(scenario, "agv", "payoff")
    return _curve_rows(curves), {}


def _run_fig5(scenario: Scenario) -> Tuple[List[Tuple], Dict]:
    spec, _, cfg = _fixed_k_context(scenario)
    curves = _payoff_or_transfer(scenario, "agv", "transfer")
    truthful = agv_transfer(spec, scenario.report_vector(), cfg)
    results = {
        "truthful_transfers": [float(t) for t in truthful],
        "truthful_transfer_sum": float(truthful.sum()),
    }
    return _curve_rows(curves), results


def _run_fig3d(scenario: Scenario) -> Tuple[List[Tuple], Dict]:
    """AGV payoff surface of relay 1 over (true rate, reported rate)."""
    spec, grid, cfg = _fixed_k_context(scenario)
    true_rates = spec.true_rates
    others_truth = list(true_rates[1:])
    points = np.concatenate([grid, np.asarray(others_truth)])
    stats = selection_curve_stats(spec, points, cfg)
    p = stats.p_selected()[: grid.size]
    phi = spec.price * stats.phi()
    const = phi[grid.size:].sum() / (spec.n - 1)
    rows = []
    for t in grid:
        payoff = spec.price * t * p + phi[: grid.size] - const
        rows.extend(
            (float(t), float(r), float(v)) for r, v in zip(grid, payoff)
        )
    return rows, {}


def _k_family(scenario: Scenario) -> List[int]:
    n = len(scenario.relays)
    return list(range(1, min(3, n) + 1))


def _run_fig6(scenario: Scenario) -> Tuple[List[Tuple], Dict]:
    spec, grid, cfg = _fixed_k_context(scenario)
    fam = truth_vs_k_scan(spec, 1, spec.true_rates[0], _k_family(scenario), cfg, grid)
    curves = {k: {"report": c["report"], "values": c["payoff"]} for k, c in fam.items()}
    return _curve_rows(curves), {}


def _run_fig7(scenario: Scenario) -> Tuple[List[Tuple], Dict]:
    spec, grid, cfg = _fixed_k_context(scenario)
    fam = truth_vs_k_scan(spec, 1, spec.true_rates[0], _k_family(scenario), cfg, grid)
    curves = {k: {"report": c["report"], "values": c["transfer"]} for k, c in fam.items()}
    return _curve_rows(curves), {}


def _require_pairs(scenario: Scenario):
    if scenario.direct is None:
        raise UsageError("this subcommand needs a direct link in the scenario")
    for si in range(len(scenario.relay_samples)):
        rv = scenario.report_vector(si)
        if rv.snr_pairs is None:
            raise UsageError("this subcommand needs per-relay SNR pairs")


def _run_fig8(scenario: Scenario) -> Tuple[List[Tuple], Dict]:
    _require_pairs(scenario)
    rows = []
    argmaxes = {}
    for si in range(len(scenario.relay_samples)):
        rv = scenario.report_vector(si)
        sweep = secrecy_vs_k_sweep(scenario.direct, rv)
        for k, rate in sweep:
            rows.append((int(k), float(rate), si + 1))
        argmaxes[str(si + 1)] = int(max(sweep, key=lambda kr: (kr[1], -kr[0]))[0])
    return rows, {"argmax_k": argmaxes}


def _run_optimal_k(scenario: Scenario) -> Tuple[List[Tuple], Dict]:
    _require_pairs(scenario)
    rows = []
    results = {}
    for si in range(len(scenario.relay_samples)):
        rv = scenario.report_vector(si)
        k, outcome, psi = optimal_k_selection(scenario.direct, rv)
        sweep = secrecy_vs_k_sweep(scenario.direct, rv)
        for kk, rate in sweep:
            rows.append((int(kk), float(rate), si + 1))
        results[str(si + 1)] = {
            "k": k,
            "selected": sorted(outcome.selected),
            "psi_sequence": [float(p) for p in psi],
        }
    return rows, {"optimal_k": results}


_VERIFY_CHECKS = {
    "baseline": [("baseline", "Prop1-monotone")],
    "vcg": [("vcg-realized", "IC"), ("vcg-realized", "IR"), ("vcg-expected", "IC")],
    "agv": [("agv", "IC"), ("agv", "IR"), ("agv", "BB")],
}


def _run_verify(scenario: Scenario) -> Tuple[List[Tuple], Dict, List[PropertyVerdict]]:
    spec, grid, cfg = _fixed_k_context(scenario)
    verdicts = []
    for mech in scenario.mechanisms:
        for check_mech, prop in _VERIFY_CHECKS[mech]:
            verdicts.append(check_property(spec, check_mech, prop, cfg, grid=grid))
    rv = scenario.report_vector()
    if scenario.direct is not None and rv.snr_pairs is not None:
        verdicts.append(
            check_property(spec, None, "Prop8-argmax", cfg, reports=rv,
                           direct=scenario.direct)
        )
    rows = [
        (v.property, v.mechanism or "selection", 1 if v.holds else 0)
        for v in verdicts
    ]
    return rows, {}, verdicts


def run(scenario: Scenario, subcommand: str) -> RunReport:
    """Execute one subcommand against a scenario."""
    if subcommand not in SUBCOMMANDS:
        raise UsageError(f"unknown subcommand {subcommand!r}")
    started = time.monotonic()
    verdicts: List[PropertyVerdict] = []
    header = CURVE_HEADER
    if subcommand == "verify":
        rows, results, verdicts = _run_verify(scenario)
        header = ("property", "mechanism", "holds")
    elif subcommand in ("fig8", "optimal-k"):
        rows, results = (_run_fig8 if subcommand == "fig8" else _run_optimal_k)(scenario)
        header = SWEEP_HEADER
    elif subcommand == "fig3d":
        rows, results = _run_fig3d(scenario)
        header = SURFACE_HEADER
    else:
        rows, results = {
            "fig2": _run_fig2, "fig3": _run_fig3, "fig4": _run_fig4,
            "fig5": _run_fig5, "fig6": _run_fig6, "fig7": _run_fig7,
        }[subcommand](scenario)

    echo = yaml.safe_load(serialize(scenario))
    return RunReport(
        scenario=echo,
        subcommand=subcommand,
        csv_header=header,
        csv_rows=rows,
        results=results,
        verdicts=verdicts,
        wall_time_s=time.monotonic() - started,
    )


def write_outputs(report: RunReport, out_dir, name: str,
                  plot: bool = False) -> Dict[str, Path]:
    """Write the CSV, JSON report and (optionally) a rendered figure."""
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    paths = {}
    csv_path = out / f"{name}.{report.subcommand}.csv"
    csv_path.write_text(report.csv_body())
    paths["csv"] = csv_path
    json_path = out / f"{name}.report.json"
    json_path.write_text(report.to_json() + "\n")
    paths["report"] = json_path
    if plot and report.subcommand != "verify":
        from .plots import render
        png_path = out / f"{name}.{report.subcommand}.png"
        render(report, png_path)
        paths["figure"] = png_path
    return paths
