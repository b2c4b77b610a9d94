"""Belief model for other relays' reports and the seeded Monte-Carlo engine.

The only non-degenerate prior is the unit-rate exponential of the belief
model; a point-mass prior exists so realized quantities can be computed
through the same expectation interface.

Draws are generated in fixed-size blocks; block b of a run uses an
independent generator seeded from (seed, stream_id, b). Estimates are
merged in block order, so results are bit-identical for any worker count.
"""

from __future__ import annotations

from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from typing import Callable, Iterator, Optional, Tuple

import numpy as np

BLOCK_SIZE = 1 << 18  # 262144 rows per block


class EstimationError(RuntimeError):
    """Non-finite values encountered during Monte-Carlo estimation."""


@dataclass(frozen=True)
class Prior:
    """Distribution of one other relay's reported secrecy rate.

    ``kind`` is "exponential" (unit rate, support [0, inf)) or
    "point_mass" (degenerate at a fixed report vector).
    """

    kind: str = "exponential"
    atom: Optional[Tuple[float, ...]] = None

    def __post_init__(self):
        if self.kind not in ("exponential", "point_mass"):
            raise ValueError(f"unsupported prior kind {self.kind!r}")
        if self.kind == "point_mass" and self.atom is None:
            raise ValueError("point_mass prior needs an atom vector")

    @classmethod
    def exponential(cls) -> "Prior":
        return cls(kind="exponential")

    @classmethod
    def point_mass(cls, values) -> "Prior":
        return cls(kind="point_mass", atom=tuple(float(v) for v in values))

    @property
    def is_degenerate(self) -> bool:
        return self.kind == "point_mass"


@dataclass(frozen=True)
class McConfig:
    """Monte-Carlo budget and random-stream identity."""

    samples: int = 10**6
    seed: int = 0
    stream_id: int = 0
    workers: int = 1

    def __post_init__(self):
        if self.samples < 1:
            raise ValueError("samples must be >= 1")
        if self.workers < 1:
            raise ValueError("workers must be >= 1")


def _block_sizes(total: int) -> Tuple[int, ...]:
    full, rest = divmod(total, BLOCK_SIZE)
    sizes = [BLOCK_SIZE] * full
    if rest:
        sizes.append(rest)
    return tuple(sizes)


def _draw_block(prior: Prior, n_others: int, cfg: McConfig, block: int, rows: int) -> np.ndarray:
    if prior.is_degenerate:
        atom = np.asarray(prior.atom, dtype=float)
        if atom.size != n_others:
            raise ValueError(
                f"point-mass atom has {atom.size} entries, expected {n_others}"
            )
        return np.broadcast_to(atom, (rows, n_others)).copy()
    rng = np.random.default_rng([cfg.seed, cfg.stream_id, block])
    return rng.standard_exponential((rows, n_others))


def iter_blocks(
    prior: Prior, n_others: int, cfg: McConfig
) -> Iterator[Tuple[int, np.ndarray]]:
    """Yield (block_index, draws) pairs covering cfg.samples rows.

    A point-mass prior yields a single row regardless of the sample budget:
    the expectation over it is exact.
    """
    if prior.is_degenerate:
        yield 0, _draw_block(prior, n_others, cfg, 0, 1)
        return
    for b, rows in enumerate(_block_sizes(cfg.samples)):
        yield b, _draw_block(prior, n_others, cfg, b, rows)


def sample_reports(p: Prior, n_others: int, cfg: McConfig) -> np.ndarray:
    """i.i.d. draws of the other relays' reports, shape (samples, n_others)."""
    if n_others == 0:
        rows = 1 if p.is_degenerate else cfg.samples
        return np.empty((rows, 0))
    return np.concatenate([blk for _, blk in iter_blocks(p, n_others, cfg)], axis=0)


def _map_blocks(
    work: Callable[[int, np.ndarray], object],
    prior: Prior,
    n_others: int,
    cfg: McConfig,
):
    """Apply ``work`` to every block and return results in block order.

    The per-block results are independent of the worker count; only wall
    time changes, so merged estimates are bit-identical across workers.
    """
    if cfg.workers == 1 or prior.is_degenerate:
        return [work(b, blk) for b, blk in iter_blocks(prior, n_others, cfg)]
    sizes = _block_sizes(cfg.samples)
    with ThreadPoolExecutor(max_workers=cfg.workers) as pool:
        futs = [
            pool.submit(lambda b=b, rows=rows: work(b, _draw_block(prior, n_others, cfg, b, rows)))
            for b, rows in enumerate(sizes)
        ]
        return [f.result() for f in futs]


def expect(
    f: Callable[[np.ndarray], np.ndarray],
    p: Prior,
    n_others: int,
    cfg: McConfig,
) -> Tuple[float, float]:
    """Monte-Carlo (estimate, standard_error) of E[f(draws)].

    ``f`` maps a (rows, n_others) block of joint draws to a length-rows
    vector. Reusing one cfg across different f values reuses identical
    draws (common random numbers). Non-finite f output aborts.
    """

    def work(block: int, draws: np.ndarray):
        vals = np.asarray(f(draws), dtype=float)
        if vals.shape != (draws.shape[0],):
            raise EstimationError(
                f"f must return one value per draw row, got shape {vals.shape}"
            )
        if not np.all(np.isfinite(vals)):
            bad = int(np.flatnonzero(~np.isfinite(vals))[0])
            raise EstimationError(
                f"non-finite f output at block {block}, row {bad}: {vals[bad]!r}"
            )
        return vals.shape[0], vals.sum(), np.square(vals).sum()

    parts = _map_blocks(work, p, n_others, cfg)
    count = sum(p[0] for p in parts)
    total = sum(p[1] for p in parts)
    total_sq = sum(p[2] for p in parts)

    mean = total / count
    if p.is_degenerate or count < 2:
        return mean, 0.0
    var = max(total_sq - count * mean * mean, 0.0) / (count - 1)
    return mean, float(np.sqrt(var / count))
