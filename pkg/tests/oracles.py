"""Independent closed-form / quadrature oracles for small instances.

Everything here is derived from exponential order statistics by direct
integration (scipy.integrate.quad), with no code shared with the sampling
engine. Valid for K <= 2 and any number of other relays m >= K.
"""

import math
from math import comb, exp

from scipy import integrate


def p_selected(report: float, m: int, k: int) -> float:
    """P(a relay reporting `report` enters the top-k against m Exp(1) draws).

    Selected iff at most k-1 of the m others exceed the report.
    """
    q = exp(-report)
    return sum(comb(m, j) * q**j * (1.0 - q) ** (m - j) for j in range(k))


def kth_largest_pdf(x: float, m: int, k: int) -> float:
    """Density of the k-th largest of m i.i.d. Exp(1) draws."""
    return comb(m, k) * k * exp(-k * x) * (1.0 - exp(-x)) ** (m - k)


def _moment(m: int, k: int, lo: float, hi: float) -> float:
    val, _ = integrate.quad(lambda x: x * kth_largest_pdf(x, m, k), lo, hi)
    return val


def expected_kth_largest(m: int, k: int) -> float:
    return _moment(m, k, 0.0, math.inf)


def vcg_expected_transfer(report: float, m: int, k: int) -> float:
    """-E[k-th largest of others; it is below the report] (price 1)."""
    return -_moment(m, k, 0.0, report)


def vcg_expected_payoff(true_rate: float, report: float, m: int, k: int,
                        price: float = 1.0) -> float:
    return price * (
        true_rate * p_selected(report, m, k) + vcg_expected_transfer(report, m, k)
    )


def phi(report: float, m: int, k: int) -> float:
    """E[sum of the others' selected draws | the relay reports `report`].

    k=1: the single slot goes to the best other only when it beats the
    report. k=2: the best other is always selected; the second-best is
    selected only when it beats the report.
    """
    if k == 1:
        return _moment(m, 1, report, math.inf)
    if k == 2:
        return expected_kth_largest(m, 1) + _moment(m, 2, report, math.inf)
    raise ValueError("oracle only supports k <= 2")


def agv_transfers(reports, k: int):
    """AGV transfer vector from the exact Phi values (price 1)."""
    n = len(reports)
    phis = [phi(r, n - 1, k) for r in reports]
    total = sum(phis)
    return [p - (total - p) / (n - 1) for p in phis]


def agv_expected_payoff(true_rates, i: int, report: float, k: int,
                        price: float = 1.0) -> float:
    """Exact AGV expected payoff of relay i (1-based) at `report`."""
    n = len(true_rates)
    others = [true_rates[j] for j in range(n) if j != i - 1]
    const = sum(phi(r, n - 1, k) for r in others) / (n - 1)
    return price * (
        true_rates[i - 1] * p_selected(report, n - 1, k)
        + phi(report, n - 1, k)
        - const
    )
