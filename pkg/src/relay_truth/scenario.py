"""Scenario files: schema, strict loading, serialization.

Scenarios are YAML with a ``schema_version`` field. dB values are
converted to linear SNRs at load time; everything downstream of this
module works in linear units.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from pathlib import Path
from typing import Dict, List, Optional, Tuple, Union

import yaml

from .channels import DirectLink, RelayChannel, db_to_linear, relay_secrecy_rate
from .mechanisms import GameSpec
from .priors import McConfig, Prior
from .selection import ReportVector

SCHEMA_VERSION = 1


class ScenarioError(ValueError):
    """Malformed or inconsistent scenario file."""


@dataclass(frozen=True)
class RelaySpec:
    """One relay: either a direct true secrecy rate or a linear SNR pair."""

    id: int
    rate: Optional[float] = None
    snr_d: Optional[float] = None
    snr_e: Optional[float] = None

    def __post_init__(self):
        has_rate = self.rate is not None
        has_pair = self.snr_d is not None or self.snr_e is not None
        if has_rate == has_pair:
            raise ScenarioError(
                f"relay {self.id}: give exactly one of a rate or an SNR pair"
            )
        if has_pair and (self.snr_d is None or self.snr_e is None):
            raise ScenarioError(f"relay {self.id}: SNR pair needs both snr_d and snr_e")

    def secrecy_rate(self, bandwidth: float) -> float:
        if self.rate is not None:
            return self.rate
        return relay_secrecy_rate(
            RelayChannel(id=self.id, snr_d=self.snr_d, snr_e=self.snr_e,
                         bandwidth=bandwidth)
        )


@dataclass(frozen=True)
class GridSpec:
    start: float = 0.0
    stop: float = 3.0
    step: float = 0.01

    def __post_init__(self):
        if not (self.step > 0 and self.stop > self.start):
            raise ScenarioError(f"grid must ascend: {self}")

    def points(self) -> List[float]:
        n = int(round((self.stop - self.start) / self.step))
        return [round(self.start + i * self.step, 12) for i in range(n + 1)]


@dataclass(frozen=True)
class Scenario:
    """A full validated game instance plus run configuration."""

    name: str
    relay_samples: Tuple[Tuple[RelaySpec, ...], ...]
    direct: Optional[DirectLink] = None
    price: float = 1.0
    k: Union[int, str] = 1  # int or "auto"
    prior: str = "exponential"
    bandwidth: float = 1.0
    mc: McConfig = field(default_factory=McConfig)
    grid: GridSpec = field(default_factory=GridSpec)
    mechanisms: Tuple[str, ...] = ("vcg", "agv")

    def __post_init__(self):
        if not self.relay_samples:
            raise ScenarioError("scenario needs at least one relay sample")
        for sample in self.relay_samples:
            ids = [r.id for r in sample]
            if len(set(ids)) != len(ids):
                raise ScenarioError(f"duplicate relay ids in {self.name}: {ids}")
        if isinstance(self.k, str) and self.k != "auto":
            raise ScenarioError(f"k must be an integer or 'auto', got {self.k!r}")
        n = len(self.relay_samples[0])
        if isinstance(self.k, int) and not 1 <= self.k <= n:
            raise ScenarioError(f"k={self.k} out of range for {n} relays")
        if self.prior != "exponential":
            raise ScenarioError(f"unsupported prior {self.prior!r}")

    @property
    def relays(self) -> Tuple[RelaySpec, ...]:
        return self.relay_samples[0]

    def true_rates(self, sample: int = 0) -> Tuple[float, ...]:
        return tuple(
            r.secrecy_rate(self.bandwidth) for r in self.relay_samples[sample]
        )

    def report_vector(self, sample: int = 0) -> ReportVector:
        relays = self.relay_samples[sample]
        if all(r.snr_d is not None for r in relays):
            return ReportVector.from_snr_pairs(
                [(r.snr_d, r.snr_e) for r in relays], bandwidth=self.bandwidth
            )
        return ReportVector(reports=self.true_rates(sample))

    def game_spec(self, sample: int = 0) -> GameSpec:
        if self.k == "auto":
            raise ScenarioError("k='auto' scenarios have no fixed-K game spec")
        return GameSpec(
            n=len(self.relay_samples[sample]),
            k=self.k,
            price=self.price,
            prior=Prior.exponential(),
            true_rates=self.true_rates(sample),
        )


def _take(mapping: Dict, allowed: Dict[str, bool], context: str) -> Dict:
    """Strict-mode key check: unknown keys are errors; required keys must exist."""
    if not isinstance(mapping, dict):
        raise ScenarioError(f"{context}: expected a mapping, got {type(mapping).__name__}")
    unknown = set(mapping) - set(allowed)
    if unknown:
        raise ScenarioError(f"{context}: unknown keys {sorted(unknown)}")
    for key, required in allowed.items():
        if required and key not in mapping:
            raise ScenarioError(f"{context}: missing required key {key!r}")
    return mapping


def _number(value, context: str) -> float:
    if not isinstance(value, (int, float)) or isinstance(value, bool) or not math.isfinite(value):
        raise ScenarioError(f"{context}: expected a finite number, got {value!r}")
    return float(value)


def _snr_value(mapping: Dict, base: str, context: str) -> Optional[float]:
    """Read one SNR from either '<base>' (linear) or '<base>_db' keys."""
    lin, db = mapping.get(base), mapping.get(base + "_db")
    if lin is not None and db is not None:
        raise ScenarioError(f"{context}: give {base} either linear or in dB, not both")
    if db is not None:
        return db_to_linear(_number(db, context))
    if lin is not None:
        return _number(lin, context)
    return None


def _parse_relay(raw: Dict, context: str) -> RelaySpec:
    _take(raw, {"id": True, "rate": False, "snr_d": False, "snr_e": False,
                "snr_d_db": False, "snr_e_db": False}, context)
    rid = raw["id"]
    if not isinstance(rid, int) or rid < 1:
        raise ScenarioError(f"{context}: id must be a positive integer")
    rate = _number(raw["rate"], context) if "rate" in raw else None
    return RelaySpec(
        id=rid,
        rate=rate,
        snr_d=_snr_value(raw, "snr_d", context),
        snr_e=_snr_value(raw, "snr_e", context),
    )


def parse_scenario(data: Dict, name_hint: str = "scenario") -> Scenario:
    _take(data, {
        "schema_version": True, "name": False, "direct": False,
        "relays": False, "relay_samples": False, "price": False, "k": False,
        "prior": False, "bandwidth": False, "mc": False, "grid": False,
        "mechanisms": False,
    }, name_hint)
    if data["schema_version"] != SCHEMA_VERSION:
        raise ScenarioError(
            f"schema_version {data['schema_version']!r} unsupported "
            f"(expected {SCHEMA_VERSION})"
        )
    if ("relays" in data) == ("relay_samples" in data):
        raise ScenarioError(f"{name_hint}: give exactly one of 'relays' or 'relay_samples'")

    if "relays" in data:
        raw_samples = [data["relays"]]
    else:
        raw_samples = data["relay_samples"]
    if not isinstance(raw_samples, list) or not all(isinstance(s, list) for s in raw_samples):
        raise ScenarioError(f"{name_hint}: relay samples must be lists of relay mappings")
    samples = tuple(
        tuple(_parse_relay(r, f"{name_hint}.relays[{si}][{ri}]")
              for ri, r in enumerate(sample))
        for si, sample in enumerate(raw_samples)
    )

    direct = None
    if "direct" in data:
        ctx = f"{name_hint}.direct"
        _take(data["direct"], {"snr_sd": False, "snr_se": False,
                               "snr_sd_db": False, "snr_se_db": False}, ctx)
        sd = _snr_value(data["direct"], "snr_sd", ctx)
        se = _snr_value(data["direct"], "snr_se", ctx)
        if sd is None or se is None:
            raise ScenarioError(f"{ctx}: needs both snr_sd and snr_se")
        direct = DirectLink(snr_sd=sd, snr_se=se)

    mc_raw = data.get("mc", {})
    _take(mc_raw, {"samples": False, "seed": False, "stream_id": False,
                   "workers": False}, f"{name_hint}.mc")
    mc = McConfig(
        samples=int(mc_raw.get("samples", 10**6)),
        seed=int(mc_raw.get("seed", 0)),
        stream_id=int(mc_raw.get("stream_id", 0)),
        workers=int(mc_raw.get("workers", 1)),
    )

    grid_raw = data.get("grid", {})
    _take(grid_raw, {"start": False, "stop": False, "step": False}, f"{name_hint}.grid")
    grid = GridSpec(
        start=_number(grid_raw.get("start", 0.0), "grid.start"),
        stop=_number(grid_raw.get("stop", 3.0), "grid.stop"),
        step=_number(grid_raw.get("step", 0.01), "grid.step"),
    )

    mechanisms = tuple(data.get("mechanisms", ["vcg", "agv"]))
    for m in mechanisms:
        if m not in ("baseline", "vcg", "agv"):
            raise ScenarioError(f"{name_hint}: unknown mechanism {m!r}")

    k = data.get("k", 1)
    if not (k == "auto" or isinstance(k, int)):
        raise ScenarioError(f"{name_hint}: k must be an integer or 'auto'")

    return Scenario(
        name=str(data.get("name", name_hint)),
        relay_samples=samples,
        direct=direct,
        price=_number(data.get("price", 1.0), "price"),
        k=k,
        prior=str(data.get("prior", "exponential")),
        bandwidth=_number(data.get("bandwidth", 1.0), "bandwidth"),
        mc=mc,
        grid=grid,
        mechanisms=mechanisms,
    )


def load_scenario(path) -> Scenario:
    """Load and validate a YAML scenario file."""
    p = Path(path)
    if not p.is_file():
        raise ScenarioError(f"scenario file not found: {p}")
    with open(p) as fh:
        data = yaml.safe_load(fh)
    if not isinstance(data, dict):
        raise ScenarioError(f"{p}: scenario must be a YAML mapping")
    return parse_scenario(data, name_hint=p.stem)


def serialize(s: Scenario) -> str:
    """YAML form of a scenario; load_scenario on the result reproduces it."""

    def relay_dict(r: RelaySpec) -> Dict:
        d = {"id": r.id}
        if r.rate is not None:
            d["rate"] = r.rate
        else:
            d["snr_d"] = r.snr_d
            d["snr_e"] = r.snr_e
        return d

    data: Dict = {"schema_version": SCHEMA_VERSION, "name": s.name}
    if len(s.relay_samples) == 1:
        data["relays"] = [relay_dict(r) for r in s.relays]
    else:
        data["relay_samples"] = [
            [relay_dict(r) for r in sample] for sample in s.relay_samples
        ]
    if s.direct is not None:
        data["direct"] = {"snr_sd": s.direct.snr_sd, "snr_se": s.direct.snr_se}
    data.update({
        "price": s.price,
        "k": s.k,
        "prior": s.prior,
        "bandwidth": s.bandwidth,
        "mc": {"samples": s.mc.samples, "seed": s.mc.seed,
               "stream_id": s.mc.stream_id, "workers": s.mc.workers},
        "grid": {"start": s.grid.start, "stop": s.grid.stop, "step": s.grid.step},
        "mechanisms": list(s.mechanisms),
    })
    return yaml.safe_dump(data, sort_keys=False)
