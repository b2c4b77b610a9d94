"""Property checkers and experiment drivers.

Statistical properties (incentive compatibility in expectation) use a
3-standard-error decision rule; algebraic properties (AGV budget balance)
use a 1e-12 absolute tolerance. Every verdict carries enough context
(seed, reports) to replay a failure.
"""

from __future__ import annotations

from dataclasses import dataclass, replace
from typing import Dict, Optional, Sequence, Tuple

import numpy as np

from .channels import DirectLink
from .mechanisms import (
    GameSpec,
    MechanismError,
    agv_transfer,
    expected_curves,
    utilities,
    vcg_transfer_realized,
)
from .priors import McConfig
from .selection import ReportVector, optimal_k_selection, secrecy_vs_k_sweep

ALGEBRAIC_TOL = 1e-12
SE_FACTOR = 3.0

PROPERTIES = ("IC", "IR", "BB", "Prop1-monotone", "Prop8-argmax")


def make_grid(start: float = 0.0, stop: float = 3.0, step: float = 0.01) -> np.ndarray:
    """Ascending report grid including both endpoints (up to rounding)."""
    n = int(round((stop - start) / step))
    return np.round(start + step * np.arange(n + 1), 12)


@dataclass
class PropertyVerdict:
    """Outcome of one property check, replayable from its witness."""

    property: str
    mechanism: Optional[str]
    holds: bool
    margin: float
    witness: Optional[Dict] = None

    def to_dict(self) -> Dict:
        return {
            "property": self.property,
            "mechanism": self.mechanism,
            "holds": bool(self.holds),
            "margin": float(self.margin),
            "witness": self.witness,
        }


def best_response_scan(
    spec: GameSpec,
    mechanism: str,
    i: int,
    grid: Sequence[float],
    cfg: McConfig,
) -> Tuple[float, Dict[str, np.ndarray]]:
    """Payoff of relay i at every grid report (CRN across points).

    Returns (argmax report, curve dict). For "vcg-realized" the other
    relays report their true rates; the expected mechanisms integrate over
    the prior.
    """
    g = np.asarray(grid, dtype=float)
    if g.size == 0 or np.any(np.diff(g) <= 0):
        raise ValueError("grid must be nonempty and strictly ascending")
    if mechanism == "vcg-realized":
        true_rates = spec.require_true_rates()
        payoffs = np.empty(g.size)
        transfers = np.empty(g.size)
        for idx, r in enumerate(g):
            reps = list(true_rates)
            reps[i - 1] = float(r)
            rv = ReportVector(reports=tuple(reps))
            d = utilities(spec, rv)[i - 1]
            t = vcg_transfer_realized(spec, rv, i)
            payoffs[idx] = d + t
            transfers[idx] = t
        curve = {
            "report": g,
            "payoff": payoffs,
            "transfer": transfers,
            "se_payoff": np.zeros_like(g),
            "se_transfer": np.zeros_like(g),
        }
    else:
        curve = expected_curves(spec, mechanism, i, g, cfg)
    arg = float(g[int(np.argmax(curve["payoff"]))])
    return arg, curve


def truth_vs_k_scan(
    spec: GameSpec,
    i: int,
    true_rate: float,
    k_values: Sequence[int],
    cfg: McConfig,
    grid: Optional[Sequence[float]] = None,
) -> Dict[int, Dict[str, np.ndarray]]:
    """AGV payoff/transfer curves for relay i at each selection size K."""
    g = make_grid() if grid is None else np.asarray(grid, dtype=float)
    rates = list(spec.require_true_rates())
    rates[i - 1] = float(true_rate)
    out = {}
    for k in k_values:
        if not 1 <= k <= spec.n:
            raise MechanismError(f"k={k} out of range for n={spec.n}")
        sub = replace(spec, k=k, true_rates=tuple(rates))
        out[k] = expected_curves(sub, "agv", i, g, cfg)
    return out


def _grid_step(grid: np.ndarray) -> float:
    return float(np.max(np.diff(grid)))


def _check_ic_expected(spec, mechanism, cfg, grid) -> PropertyVerdict:
    true_rates = spec.require_true_rates()
    step = _grid_step(grid)
    worst = -np.inf
    witness = None
    for i in range(1, spec.n + 1):
        arg, _ = best_response_scan(spec, mechanism, i, grid, cfg)
        err = abs(arg - true_rates[i - 1])
        if err > worst:
            worst = err
            witness = {"relay": i, "argmax": arg, "true_rate": true_rates[i - 1]}
    holds = worst <= step + 1e-12
    return PropertyVerdict(
        property="IC", mechanism=mechanism, holds=holds,
        margin=worst - step,
        witness=None if holds else {**witness, "seed": cfg.seed},
    )


def _vcg_realized_sweep(spec, grid):
    """Yield (relay, report, payoff, truthful payoff) over the full grid."""
    true_rates = spec.require_true_rates()
    for i in range(1, spec.n + 1):
        truthful = ReportVector(reports=tuple(true_rates))
        d_t = utilities(spec, truthful)[i - 1]
        u_truth = d_t + vcg_transfer_realized(spec, truthful, i)
        for r in grid:
            reps = list(true_rates)
            reps[i - 1] = float(r)
            rv = ReportVector(reports=tuple(reps))
            u = utilities(spec, rv)[i - 1] + vcg_transfer_realized(spec, rv, i)
            yield i, float(r), u, u_truth


def _check_vcg_realized(spec, prop, grid) -> PropertyVerdict:
    """IC: truthful dominance over every grid deviation. IR: truthful
    payoff is nonnegative for every relay."""
    worst = np.inf
    witness = None
    for i, r, u, u_truth in _vcg_realized_sweep(spec, grid):
        if prop == "IC":
            margin = u_truth - u
            cand = {"relay": i, "report": r, "payoff": u, "truthful_payoff": u_truth}
        else:
            margin = u_truth
            cand = {"relay": i, "truthful_payoff": u_truth}
        if margin < worst:
            worst = margin
            witness = cand
    holds = worst >= -ALGEBRAIC_TOL
    return PropertyVerdict(
        property=prop, mechanism="vcg-realized", holds=holds, margin=worst,
        witness=None if holds else witness,
    )


def check_property(
    spec: GameSpec,
    mechanism: Optional[str],
    prop: str,
    cfg: McConfig,
    grid: Optional[Sequence[float]] = None,
    reports: Optional[ReportVector] = None,
    direct: Optional[DirectLink] = None,
    n_report_draws: int = 100,
) -> PropertyVerdict:
    """Run one property check and return a replayable verdict.

    Applicable pairs: (agv | vcg-expected, IC), (vcg-realized, IC/IR/BB),
    (agv, IR/BB), (baseline, Prop1-monotone) and (None, Prop8-argmax)
    which needs SNR-pair reports plus a direct link.
    """
    if prop not in PROPERTIES:
        raise ValueError(f"unknown property {prop!r}")

    if prop == "Prop8-argmax":
        if reports is None or reports.snr_pairs is None or direct is None:
            raise MechanismError("Prop8-argmax needs SNR-pair reports and a direct link")
        k_opt, _, psi_seq = optimal_k_selection(direct, reports)
        sweep = secrecy_vs_k_sweep(direct, reports)
        k_sweep = max(sweep, key=lambda kr: (kr[1], -kr[0]))[0]
        holds = k_opt == k_sweep
        return PropertyVerdict(
            property=prop, mechanism=None, holds=holds,
            margin=float(psi_seq[-1]),
            witness=None if holds else {"k_greedy": k_opt, "k_sweep": k_sweep},
        )

    g = make_grid() if grid is None else np.asarray(grid, dtype=float)

    if mechanism == "baseline":
        if prop != "Prop1-monotone":
            raise MechanismError(f"({mechanism}, {prop}) is not a checkable pair")
        worst = np.inf
        witness = None
        for i in range(1, spec.n + 1):
            _, curve = best_response_scan(spec, "baseline", i, g, cfg)
            diffs = np.diff(curve["payoff"])
            m = float(diffs.min()) if diffs.size else 0.0
            if m < worst:
                worst = m
                witness = {"relay": i, "seed": cfg.seed}
        holds = worst >= -ALGEBRAIC_TOL
        return PropertyVerdict(
            property=prop, mechanism=mechanism, holds=holds, margin=worst,
            witness=None if holds else witness,
        )

    if mechanism == "vcg-realized":
        if prop in ("IC", "IR"):
            coarse = make_grid(0.0, 3.0, 0.1) if grid is None else g
            return _check_vcg_realized(spec, prop, coarse)
        if prop == "BB":
            rv = reports or ReportVector(reports=spec.require_true_rates())
            t = [vcg_transfer_realized(spec, rv, i) for i in range(1, spec.n + 1)]
            total = float(sum(t))
            holds = abs(total) <= ALGEBRAIC_TOL
            return PropertyVerdict(
                property=prop, mechanism=mechanism, holds=holds, margin=total,
                witness=None if holds else {"reports": list(rv.reports), "total": total},
            )
        raise MechanismError(f"({mechanism}, {prop}) is not a checkable pair")

    if mechanism == "vcg-expected":
        if prop != "IC":
            raise MechanismError(f"({mechanism}, {prop}) is not a checkable pair")
        return _check_ic_expected(spec, mechanism, cfg, g)

    if mechanism == "agv":
        if prop == "IC":
            return _check_ic_expected(spec, mechanism, cfg, g)
        if prop == "IR":
            true_rates = spec.require_true_rates()
            worst = np.inf
            witness = None
            for i in range(1, spec.n + 1):
                r = true_rates[i - 1]
                curve = expected_curves(spec, "agv", i, [r], cfg)
                ratio = float(curve["payoff"][0] - SE_FACTOR * curve["se_payoff"][0])
                if ratio < worst:
                    worst = ratio
                    witness = {"relay": i, "payoff": float(curve["payoff"][0]),
                               "se": float(curve["se_payoff"][0]), "seed": cfg.seed}
            holds = worst > 0
            return PropertyVerdict(
                property=prop, mechanism=mechanism, holds=holds, margin=worst,
                witness=None if holds else witness,
            )
        if prop == "BB":
            # the zero-sum identity is algebraic, so a small sample budget
            # per Phi table is enough; the draws only move the Phi values
            cfg = replace(cfg, samples=min(cfg.samples, 10**4))
            rng = np.random.default_rng(cfg.seed)
            worst = 0.0
            witness = None
            for _ in range(n_report_draws):
                reps = ReportVector(reports=tuple(rng.standard_exponential(spec.n)))
                total = float(agv_transfer(spec, reps, cfg).sum())
                if abs(total) > abs(worst):
                    worst = total
                    witness = {"reports": list(reps.reports), "total": total,
                               "seed": cfg.seed}
            holds = abs(worst) <= ALGEBRAIC_TOL
            return PropertyVerdict(
                property=prop, mechanism=mechanism, holds=holds, margin=worst,
                witness=None if holds else witness,
            )
        raise MechanismError(f"({mechanism}, {prop}) is not a checkable pair")

    raise MechanismError(f"unknown mechanism {mechanism!r} for property {prop!r}")
