"""Utilities, VCG/AGV transfer payments, payoffs and budget balance.

Selection always runs on reported rates; utilities of selected relays are
paid on true rates. Expected quantities are estimated under the common
prior with a shared draw table per run (common random numbers), which
makes the AGV budget-balance identity algebraic rather than statistical.

The expected-value engine exploits the structure of top-K selection: with
the other relays' draws sorted per sample, relay i's selection depends on
its report only through the K-th largest of the others. Sorting those
thresholds once per block turns a whole report grid into binary searches
over prefix sums.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Dict, Optional, Sequence, Tuple

import numpy as np

from .priors import McConfig, Prior, _map_blocks
from .selection import ReportVector, select_top_k


class MechanismError(ValueError):
    """Invalid mechanism arguments (missing rates, undefined mechanism)."""


MECHANISMS = ("baseline", "vcg-realized", "vcg-expected", "agv")


@dataclass(frozen=True)
class GameSpec:
    """One game instance: N relays, K slots, price per unit secrecy rate."""

    n: int
    k: int
    price: float = 1.0
    prior: Prior = field(default_factory=Prior.exponential)
    true_rates: Optional[Tuple[float, ...]] = None

    def __post_init__(self):
        if not 1 <= self.k <= self.n:
            raise MechanismError(f"need 1 <= k <= n, got k={self.k}, n={self.n}")
        if not self.price > 0:
            raise MechanismError(f"price must be > 0, got {self.price}")
        if self.true_rates is not None:
            if len(self.true_rates) != self.n:
                raise MechanismError("true_rates length must equal n")
            if any(r < 0 for r in self.true_rates):
                raise MechanismError("true_rates must be >= 0")

    def require_true_rates(self) -> Tuple[float, ...]:
        if self.true_rates is None:
            raise MechanismError("this operation needs true_rates on the GameSpec")
        return self.true_rates


@dataclass
class MechanismResult:
    """Per-relay utility, transfer and payoff for one mechanism run."""

    utilities: Tuple[float, ...]
    transfers: Tuple[float, ...]
    payoffs: Tuple[float, ...]
    mode: str  # "realized" | "expected"
    meta: Dict = field(default_factory=dict)


def utilities(spec: GameSpec, reports: ReportVector) -> np.ndarray:
    """D_i = price * true_rate_i for relays selected on their reports, else 0."""
    true_rates = spec.require_true_rates()
    if len(reports) != spec.n:
        raise MechanismError(f"expected {spec.n} reports, got {len(reports)}")
    outcome = select_top_k(reports, spec.k)
    d = np.zeros(spec.n)
    for i in outcome.selected:
        d[i - 1] = spec.price * true_rates[i - 1]
    return d


def _reported_utility_sum(reports: Sequence[float], k: int, price: float,
                          exclude: Optional[int] = None) -> float:
    """Total reported utility of the top-k selection, optionally without one relay.

    When a relay is excluded, selection re-runs over the remaining relays
    with k clamped to their count.
    """
    ids = [i for i in range(1, len(reports) + 1) if i != exclude]
    if not ids:
        return 0.0
    sub = ReportVector(reports=tuple(reports[i - 1] for i in ids))
    outcome = select_top_k(sub, min(k, len(ids)))
    # outcome ids index the reduced vector; map back through `ids`
    return price * sum(reports[ids[j - 1] - 1] for j in outcome.selected)


def vcg_transfer_realized(spec: GameSpec, reports: ReportVector, i: int) -> float:
    """VCG transfer: others' reported utility with i present minus without i."""
    if len(reports) != spec.n:
        raise MechanismError(f"expected {spec.n} reports, got {len(reports)}")
    if not 1 <= i <= spec.n:
        raise MechanismError(f"relay id {i} out of range")
    outcome = select_top_k(reports, spec.k)
    with_i = spec.price * sum(
        reports.reports[j - 1] for j in outcome.selected if j != i
    )
    without_i = _reported_utility_sum(reports.reports, spec.k, spec.price, exclude=i)
    return with_i - without_i


def budget_balance(t: Sequence[float]) -> float:
    """Sum of transfers: 0 for AGV, <= 0 for realized VCG."""
    return float(sum(t))


# --------------------------------------------------------------------------
# Expected-value engine (continuous prior)

@dataclass
class _CurveStats:
    """Per-query aggregates over the shared draw table.

    ``queries`` are report values; "sel" sums run over draws where a relay
    reporting that value is selected. D = S_sel - S_full is the drop in the
    others' selected sum caused by the relay's entry (= -threshold).
    """

    queries: np.ndarray
    rows: int
    cnt_sel: np.ndarray
    s_d: np.ndarray
    s_d2: np.ndarray
    s_ssel: np.ndarray
    s_ssel2: np.ndarray
    s_sfull: np.ndarray
    s_sfull2: np.ndarray
    tot_sfull: float
    tot_sfull2: float

    def p_selected(self) -> np.ndarray:
        return self.cnt_sel / self.rows

    def phi(self) -> np.ndarray:
        """E[others' selected sum | report], unscaled by price."""
        return (self.s_ssel + (self.tot_sfull - self.s_sfull)) / self.rows

    def phi_var(self) -> np.ndarray:
        m2 = (self.s_ssel2 + (self.tot_sfull2 - self.s_sfull2)) / self.rows
        return np.maximum(m2 - self.phi() ** 2, 0.0)

    def vcg_transfer(self) -> np.ndarray:
        """E[(S_sel - S_full) * selected], unscaled by price."""
        return self.s_d / self.rows

    def vcg_transfer_var(self) -> np.ndarray:
        m2 = self.s_d2 / self.rows
        return np.maximum(m2 - self.vcg_transfer() ** 2, 0.0)

    def se(self, var: np.ndarray) -> np.ndarray:
        return np.sqrt(var / self.rows)


def selection_curve_stats(
    spec: GameSpec, queries: Sequence[float], cfg: McConfig
) -> _CurveStats:
    """Aggregate selection statistics at each query report value.

    Uses the shared draw table for (prior, cfg): every query and every
    relay sees identical draws (common random numbers). Continuous priors
    only; ties between a query and a draw have probability zero.
    """
    if spec.prior.is_degenerate:
        raise MechanismError("curve stats require a continuous prior")
    q = np.asarray(queries, dtype=float)
    m = spec.n - 1
    k = spec.k
    kk = min(k, m)
    ks = min(k - 1, m)

    def work(block: int, draws: np.ndarray):
        xs = np.sort(draws, axis=1)[:, ::-1]
        s_full = xs[:, :kk].sum(axis=1)
        s_sel = xs[:, :ks].sum(axis=1)
        d = s_sel - s_full
        if m >= k:
            thresh = xs[:, k - 1]
        else:
            thresh = np.full(draws.shape[0], -np.inf)
        order = np.argsort(thresh, kind="stable")
        t_sorted = thresh[order]

        def prefix(v):
            c = np.concatenate(([0.0], np.cumsum(v[order])))
            return c

        p_one = np.arange(draws.shape[0] + 1, dtype=float)
        p_d, p_d2 = prefix(d), prefix(d * d)
        p_ss, p_ss2 = prefix(s_sel), prefix(s_sel * s_sel)
        p_sf, p_sf2 = prefix(s_full), prefix(s_full * s_full)
        idx = np.searchsorted(t_sorted, q, side="left")
        return (
            draws.shape[0],
            p_one[idx],
            p_d[idx],
            p_d2[idx],
            p_ss[idx],
            p_ss2[idx],
            p_sf[idx],
            p_sf2[idx],
            float(s_full.sum()),
            float(np.square(s_full).sum()),
        )

    parts = _map_blocks(work, spec.prior, m, cfg)
    rows = sum(p[0] for p in parts)
    sums = [sum(p[j] for p in parts) for j in range(1, 10)]
    return _CurveStats(q, rows, *sums)


def _realized_point(spec: GameSpec, i: int, report: float) -> Tuple[bool, float, float]:
    """(selected, others' selected reported sum, VCG transfer) for a
    point-mass prior, using the exact tie rules of select_top_k."""
    atom = spec.prior.atom
    if atom is None or len(atom) != spec.n - 1:
        raise MechanismError("point-mass atom must have n-1 entries")
    full = list(atom)
    full.insert(i - 1, report)
    rv = ReportVector(reports=tuple(full))
    outcome = select_top_k(rv, spec.k)
    others_sum = spec.price * sum(rv.reports[j - 1] for j in outcome.selected if j != i)
    transfer = vcg_transfer_realized(spec, rv, i)
    return i in outcome.selected, others_sum, transfer


def baseline_expected_payoff(
    spec: GameSpec, i: int, report: float, cfg: McConfig
) -> float:
    """Expected payoff with no transfers: price * true_rate * P(selected)."""
    true_rate = spec.require_true_rates()[i - 1]
    if spec.prior.is_degenerate:
        selected, _, _ = _realized_point(spec, i, report)
        return spec.price * true_rate * float(selected)
    stats = selection_curve_stats(spec, [report], cfg)
    return float(spec.price * true_rate * stats.p_selected()[0])


def vcg_expected(
    spec: GameSpec, i: int, report: float, cfg: McConfig
) -> Tuple[float, float]:
    """(expected transfer, expected payoff) for relay i under the prior."""
    true_rate = spec.require_true_rates()[i - 1]
    if spec.prior.is_degenerate:
        selected, _, transfer = _realized_point(spec, i, report)
        return transfer, spec.price * true_rate * float(selected) + transfer
    stats = selection_curve_stats(spec, [report], cfg)
    transfer = float(spec.price * stats.vcg_transfer()[0])
    payoff = float(spec.price * true_rate * stats.p_selected()[0]) + transfer
    return transfer, payoff


def agv_phi(spec: GameSpec, i: int, report: float, cfg: McConfig) -> float:
    """Expected total utility of the other relays when i reports ``report``."""
    if spec.prior.is_degenerate:
        _, others_sum, _ = _realized_point(spec, i, report)
        return others_sum
    stats = selection_curve_stats(spec, [report], cfg)
    return float(spec.price * stats.phi()[0])


def _phi_table(spec: GameSpec, points: Sequence[float], cfg: McConfig) -> np.ndarray:
    """Phi evaluated at each point from one shared draw table."""
    if spec.prior.is_degenerate:
        return np.array([agv_phi(spec, 1, p, cfg) for p in points])
    stats = selection_curve_stats(spec, points, cfg)
    return spec.price * stats.phi()


def agv_transfer(spec: GameSpec, reports: ReportVector, cfg: McConfig) -> np.ndarray:
    """AGV transfers t_i = Phi_i(g_i) - mean of the other relays' Phi values.

    The sum and divisor run over all n relays (divisor n-1), which makes
    sum(t) = 0 an algebraic identity given one shared Phi table.
    """
    if spec.n < 2:
        raise MechanismError("AGV transfers need at least 2 relays")
    if len(reports) != spec.n:
        raise MechanismError(f"expected {spec.n} reports, got {len(reports)}")
    phi = _phi_table(spec, reports.reports, cfg)
    total = phi.sum()
    return phi - (total - phi) / (spec.n - 1)


def agv_expected_payoff(
    spec: GameSpec, i: int, report: float, cfg: McConfig
) -> float:
    """Expected payoff of relay i under AGV when the others report truthfully."""
    true_rates = spec.require_true_rates()
    others_truth = [true_rates[j] for j in range(spec.n) if j != i - 1]
    if spec.prior.is_degenerate:
        selected, others_sum, _ = _realized_point(spec, i, report)
        const = sum(agv_phi(spec, 1, r, cfg) for r in others_truth) / (spec.n - 1)
        return spec.price * true_rates[i - 1] * float(selected) + others_sum - const
    points = [report] + others_truth
    stats = selection_curve_stats(spec, points, cfg)
    phi = spec.price * stats.phi()
    e_d = spec.price * true_rates[i - 1] * stats.p_selected()[0]
    const = phi[1:].sum() / (spec.n - 1)
    return float(e_d + phi[0] - const)


def expected_curves(
    spec: GameSpec,
    mechanism: str,
    i: int,
    grid: Sequence[float],
    cfg: McConfig,
) -> Dict[str, np.ndarray]:
    """Expected payoff/transfer of relay i over a report grid, with CRN.

    Returns arrays keyed "report", "payoff", "transfer", "se_payoff",
    "se_transfer"; all grid points share one draw table, so the curves are
    step functions of the report with no independent sampling noise
    between points.
    """
    true_rates = spec.require_true_rates()
    c_true = spec.price * true_rates[i - 1]
    pi = spec.price
    g = np.asarray(grid, dtype=float)

    if mechanism == "agv":
        others_truth = [true_rates[j] for j in range(spec.n) if j != i - 1]
        points = np.concatenate([g, np.asarray(others_truth)])
        stats = selection_curve_stats(spec, points, cfg)
        ng = g.size
        p = stats.p_selected()[:ng]
        phi = pi * stats.phi()
        const = phi[ng:].sum() / (spec.n - 1)
        transfer = phi[:ng] - const
        payoff = c_true * p + transfer
        m2 = (pi**2) * (
            (c_true / pi) ** 2 * stats.cnt_sel[:ng]
            + 2 * (c_true / pi) * stats.s_ssel[:ng]
            + stats.s_ssel2[:ng]
            + (stats.tot_sfull2 - stats.s_sfull2[:ng])
        ) / stats.rows
        var_pay = np.maximum(m2 - (c_true * p + phi[:ng]) ** 2, 0.0)
        var_tr = (pi**2) * stats.phi_var()[:ng]
        return {
            "report": g,
            "payoff": payoff,
            "transfer": transfer,
            "se_payoff": stats.se(var_pay),
            "se_transfer": stats.se(var_tr),
        }

    stats = selection_curve_stats(spec, g, cfg)
    p = stats.p_selected()
    if mechanism == "baseline":
        payoff = c_true * p
        var = (c_true**2) * p * (1.0 - p)
        zeros = np.zeros_like(g)
        return {
            "report": g,
            "payoff": payoff,
            "transfer": zeros,
            "se_payoff": stats.se(var),
            "se_transfer": zeros,
        }
    if mechanism == "vcg-expected":
        transfer = pi * stats.vcg_transfer()
        payoff = c_true * p + transfer
        m2 = (pi**2) * (
            (c_true / pi) ** 2 * stats.cnt_sel
            + 2 * (c_true / pi) * stats.s_d
            + stats.s_d2
        ) / stats.rows
        var_pay = np.maximum(m2 - payoff**2, 0.0)
        var_tr = (pi**2) * stats.vcg_transfer_var()
        return {
            "report": g,
            "payoff": payoff,
            "transfer": transfer,
            "se_payoff": stats.se(var_pay),
            "se_transfer": stats.se(var_tr),
        }
    raise MechanismError(
        f"no expected curves for mechanism {mechanism!r}; "
        "use 'baseline', 'vcg-expected' or 'agv'"
    )


def mechanism_result(
    spec: GameSpec,
    reports: ReportVector,
    mechanism: str,
    cfg: Optional[McConfig] = None,
) -> MechanismResult:
    """Per-relay utilities, transfers and payoffs for one mechanism."""
    if mechanism in ("baseline", "vcg-realized"):
        d = utilities(spec, reports)
        if mechanism == "baseline":
            t = np.zeros(spec.n)
        else:
            t = np.array(
                [vcg_transfer_realized(spec, reports, i) for i in range(1, spec.n + 1)]
            )
        return MechanismResult(
            utilities=tuple(d), transfers=tuple(t), payoffs=tuple(d + t),
            mode="realized",
        )
    if cfg is None:
        raise MechanismError(f"mechanism {mechanism!r} needs a Monte-Carlo config")
    if mechanism == "agv":
        t = agv_transfer(spec, reports, cfg)
        stats = None
        if not spec.prior.is_degenerate:
            stats = selection_curve_stats(spec, reports.reports, cfg)
            p_sel = stats.p_selected()
        else:
            p_sel = np.array(
                [float(_realized_point(spec, i, reports.reports[i - 1])[0])
                 for i in range(1, spec.n + 1)]
            )
        true_rates = np.asarray(spec.require_true_rates())
        d = spec.price * true_rates * p_sel
        return MechanismResult(
            utilities=tuple(d), transfers=tuple(t), payoffs=tuple(d + t),
            mode="expected",
            meta={"samples": cfg.samples, "seed": cfg.seed, "stream_id": cfg.stream_id},
        )
    if mechanism == "vcg-expected":
        pairs = [
            vcg_expected(spec, i, reports.reports[i - 1], cfg)
            for i in range(1, spec.n + 1)
        ]
        t = np.array([p[0] for p in pairs])
        u = np.array([p[1] for p in pairs])
        return MechanismResult(
            utilities=tuple(u - t), transfers=tuple(t), payoffs=tuple(u),
            mode="expected",
            meta={"samples": cfg.samples, "seed": cfg.seed, "stream_id": cfg.stream_id},
        )
    raise MechanismError(f"unknown mechanism {mechanism!r}; expected one of {MECHANISMS}")
