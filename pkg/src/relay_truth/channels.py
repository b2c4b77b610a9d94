"""Channel/SNR arithmetic and secrecy-rate formulas.

All SNRs are stored in linear units; dB conversion happens at I/O
boundaries only (see :mod:`relay_truth.scenario`).
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Iterable


class ChannelError(ValueError):
    """Invalid channel parameters or inconsistent channel configuration."""


def db_to_linear(x_db: float) -> float:
    """Convert a dB value to a linear ratio: 10^(x/10)."""
    if not math.isfinite(x_db):
        raise ChannelError(f"dB value must be finite, got {x_db!r}")
    return 10.0 ** (x_db / 10.0)


def linear_to_db(x: float) -> float:
    """Inverse of :func:`db_to_linear`; requires x > 0."""
    if not (x > 0.0 and math.isfinite(x)):
        raise ChannelError(f"linear value must be positive and finite, got {x!r}")
    return 10.0 * math.log10(x)


@dataclass(frozen=True)
class RelayChannel:
    """One relay's links to destination and eavesdropper.

    ``snr_d`` / ``snr_e`` are linear SNRs of the relay->destination and
    relay->eavesdropper links. ``bandwidth`` is the W factor multiplying
    log2 in all rate formulas.
    """

    id: int
    snr_d: float
    snr_e: float
    bandwidth: float = 1.0

    def __post_init__(self):
        if self.snr_d < 0 or self.snr_e < 0:
            raise ChannelError(
                f"relay {self.id}: SNRs must be >= 0 "
                f"(snr_d={self.snr_d}, snr_e={self.snr_e})"
            )
        if not self.bandwidth > 0:
            raise ChannelError(f"relay {self.id}: bandwidth must be > 0")

    @classmethod
    def from_gains(
        cls,
        id: int,
        power: float,
        gain_d: float,
        gain_e: float,
        noise_power: float,
        bandwidth: float = 1.0,
    ) -> "RelayChannel":
        """Build from transmit power, channel gains and noise power.

        snr = power * gain^2 / noise_power for each link.
        """
        if not noise_power > 0:
            raise ChannelError("noise power must be > 0")
        if power < 0:
            raise ChannelError("transmit power must be >= 0")
        return cls(
            id=id,
            snr_d=power * gain_d**2 / noise_power,
            snr_e=power * gain_e**2 / noise_power,
            bandwidth=bandwidth,
        )


@dataclass(frozen=True)
class DirectLink:
    """Source->destination and source->eavesdropper linear SNRs."""

    snr_sd: float
    snr_se: float

    def __post_init__(self):
        if self.snr_sd < 0 or self.snr_se < 0:
            raise ChannelError(
                f"direct-link SNRs must be >= 0 (snr_sd={self.snr_sd}, "
                f"snr_se={self.snr_se})"
            )

    @classmethod
    def from_gains(
        cls, power: float, gain_d: float, gain_e: float, noise_power: float
    ) -> "DirectLink":
        if not noise_power > 0:
            raise ChannelError("noise power must be > 0")
        if power < 0:
            raise ChannelError("transmit power must be >= 0")
        return cls(
            snr_sd=power * gain_d**2 / noise_power,
            snr_se=power * gain_e**2 / noise_power,
        )


def relay_secrecy_rate(c: RelayChannel) -> float:
    """Secrecy rate of a single relay: [W log2((1+snr_d)/(1+snr_e))]^+.

    The positive-part clamp is applied after the log, so the result is 0
    exactly when snr_d <= snr_e.
    """
    rate = c.bandwidth * math.log2((1.0 + c.snr_d) / (1.0 + c.snr_e))
    return max(rate, 0.0)


def system_secrecy_rate(
    d: DirectLink,
    selected: Iterable[RelayChannel],
    bandwidth: float | None = None,
) -> float:
    """System secrecy rate with MRC combining over the selected relays.

    [W log2((1 + snr_sd + sum snr_d,i) / (1 + snr_se + sum snr_e,i))]^+.
    With no relays selected this reduces to the direct-link secrecy rate.
    All selected relays must share one bandwidth; ``bandwidth`` overrides W
    for the empty selection and must agree with the relays otherwise.
    """
    selected = list(selected)
    if selected:
        bandwidths = {c.bandwidth for c in selected}
        if bandwidth is not None:
            bandwidths.add(bandwidth)
        if len(bandwidths) > 1:
            raise ChannelError(f"inconsistent bandwidths across relays: {bandwidths}")
        w = selected[0].bandwidth
    else:
        w = bandwidth if bandwidth is not None else 1.0
    num = 1.0 + d.snr_sd + sum(c.snr_d for c in selected)
    den = 1.0 + d.snr_se + sum(c.snr_e for c in selected)
    rate = w * math.log2(num / den)
    return max(rate, 0.0)
