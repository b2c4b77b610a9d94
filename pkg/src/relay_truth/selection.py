"""Relay selection: top-K by reported rate, and the greedy optimal-K rule.

Ties are always broken toward the lower relay id so selections are
deterministic and reproducible in golden tests.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Optional, Sequence, Tuple

from .channels import DirectLink, RelayChannel, relay_secrecy_rate, system_secrecy_rate


class SelectionError(ValueError):
    """Invalid selection arguments (bad k, malformed reports)."""


@dataclass(frozen=True)
class ReportVector:
    """Per-relay reported secrecy rates, indexed by 1-based relay id.

    ``snr_pairs``, when present, holds the reported (snr_d, snr_e) linear
    pair per relay; it is required by the optimal-K path. If both a scalar
    report and a pair are given the scalar must equal the pair's secrecy
    rate (checked at construction).
    """

    reports: Tuple[float, ...]
    snr_pairs: Optional[Tuple[Tuple[float, float], ...]] = None
    bandwidth: float = 1.0

    def __post_init__(self):
        if len(self.reports) < 1:
            raise SelectionError("need at least one relay report")
        for idx, r in enumerate(self.reports):
            if not (math.isfinite(r) and r >= 0):
                raise SelectionError(f"report for relay {idx + 1} must be finite and >= 0, got {r!r}")
        if self.snr_pairs is not None:
            if len(self.snr_pairs) != len(self.reports):
                raise SelectionError("snr_pairs length must match reports length")
            for idx, ((sd, se), r) in enumerate(zip(self.snr_pairs, self.reports)):
                rate = relay_secrecy_rate(
                    RelayChannel(id=idx + 1, snr_d=sd, snr_e=se, bandwidth=self.bandwidth)
                )
                if not math.isclose(rate, r, rel_tol=1e-9, abs_tol=1e-9):
                    raise SelectionError(
                        f"relay {idx + 1}: scalar report {r} does not match "
                        f"secrecy rate {rate} of its SNR pair"
                    )

    @classmethod
    def from_rates(cls, rates: Sequence[float]) -> "ReportVector":
        return cls(reports=tuple(float(r) for r in rates))

    @classmethod
    def from_snr_pairs(
        cls, pairs: Sequence[Tuple[float, float]], bandwidth: float = 1.0
    ) -> "ReportVector":
        """Build a report vector whose scalar reports are derived from pairs."""
        rates = tuple(
            relay_secrecy_rate(RelayChannel(id=i + 1, snr_d=sd, snr_e=se, bandwidth=bandwidth))
            for i, (sd, se) in enumerate(pairs)
        )
        return cls(reports=rates, snr_pairs=tuple((float(a), float(b)) for a, b in pairs),
                   bandwidth=bandwidth)

    def __len__(self) -> int:
        return len(self.reports)

    def relay_channels(self) -> Tuple[RelayChannel, ...]:
        if self.snr_pairs is None:
            raise SelectionError("this operation needs per-relay SNR pairs")
        return tuple(
            RelayChannel(id=i + 1, snr_d=sd, snr_e=se, bandwidth=self.bandwidth)
            for i, (sd, se) in enumerate(self.snr_pairs)
        )


@dataclass(frozen=True)
class SelectionOutcome:
    """Chosen relay ids plus the full deterministic ranking used."""

    selected: frozenset
    ranking: Tuple[int, ...]
    k_value_of_selection: float


def _ranking(reports: Sequence[float]) -> Tuple[int, ...]:
    # descending by report, ties by lower id
    ids = range(1, len(reports) + 1)
    return tuple(sorted(ids, key=lambda i: (-reports[i - 1], i)))


def select_top_k(r: ReportVector, k: int) -> SelectionOutcome:
    """Pick the k relays with the largest reported rates (lower id wins ties)."""
    n = len(r)
    if not 1 <= k <= n:
        raise SelectionError(f"k must be in [1, {n}], got {k}")
    ranking = _ranking(r.reports)
    chosen = ranking[:k]
    return SelectionOutcome(
        selected=frozenset(chosen),
        ranking=ranking,
        k_value_of_selection=sum(r.reports[i - 1] for i in chosen),
    )


def _ratio_key(sd: float, se: float) -> float:
    """Sort key k_i = snr_d/snr_e with conventions for zero denominators.

    snr_e = 0 with snr_d > 0 ranks first (k_i = +inf); a fully dead relay
    (both zero) gets k_i = 1, i.e. no effect on the MRC ratio.
    """
    if not (math.isfinite(sd) and math.isfinite(se)):
        raise SelectionError(f"SNR pair must be finite, got ({sd}, {se})")
    if se == 0.0:
        return math.inf if sd > 0.0 else 1.0
    return sd / se


def _psi(d: DirectLink, pairs: Sequence[Tuple[float, float]]) -> float:
    num = 1.0 + d.snr_sd + sum(p[0] for p in pairs)
    den = 1.0 + d.snr_se + sum(p[1] for p in pairs)
    return num / den


def optimal_k_selection(
    d: DirectLink, reports: ReportVector
) -> Tuple[int, SelectionOutcome, Tuple[float, ...]]:
    """Greedy optimal relay count: add relays in k_i order while Psi_i < k_(i+1).

    Returns (K, outcome over the K chosen relays, (Psi_1..Psi_K)). Psi_K is
    the maximum of the whole Psi sequence, so selecting K relays maximizes
    the system secrecy rate.
    """
    if reports.snr_pairs is None:
        raise SelectionError("optimal_k_selection needs per-relay SNR pairs")
    n = len(reports)
    pairs = reports.snr_pairs
    order = sorted(range(1, n + 1), key=lambda i: (-_ratio_key(*pairs[i - 1]), i))

    psi_seq = []
    k = 1
    while True:
        psi_seq.append(_psi(d, [pairs[i - 1] for i in order[:k]]))
        if k >= n:
            break
        next_key = _ratio_key(*pairs[order[k] - 1])
        if psi_seq[-1] >= next_key:
            break
        k += 1

    chosen = order[:k]
    outcome = SelectionOutcome(
        selected=frozenset(chosen),
        ranking=tuple(order),
        k_value_of_selection=sum(reports.reports[i - 1] for i in chosen),
    )
    return k, outcome, tuple(psi_seq)


def secrecy_vs_k_sweep(
    d: DirectLink, reports: ReportVector
) -> Tuple[Tuple[int, float], ...]:
    """System secrecy rate for each k = 1..N, adding relays in k_i order."""
    if reports.snr_pairs is None:
        raise SelectionError("secrecy_vs_k_sweep needs per-relay SNR pairs")
    n = len(reports)
    pairs = reports.snr_pairs
    order = sorted(range(1, n + 1), key=lambda i: (-_ratio_key(*pairs[i - 1]), i))
    channels = reports.relay_channels()
    out = []
    for k in range(1, n + 1):
        rate = system_secrecy_rate(d, [channels[i - 1] for i in order[:k]])
        out.append((k, rate))
    return tuple(out)
