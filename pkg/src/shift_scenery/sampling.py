"""Seeded, reproducible sampling of finite trajectories.

All randomness flows through counter-based Philox generators keyed by
``SeedSequence([seed, *stream])``, so identical inputs give bit-identical
outputs on every platform and for every degree of parallelism.  Per-trial
seeds for ensembles are derived from ``(base_seed, trial_index)``; trials
never share a stream.

Forward sampling draws the first symbol from the stationary law and walks the
transition rows.  Backward sampling walks the time-reversed kernel
``R[j, i] = pi[i] P[i, j] / pi[j]``, which reproduces the stationary joint
law of any window.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import UnsupportedModelError
from .models import (
    BernoulliModel,
    BlockGibbsModel,
    MarkovModel,
    MeasureModel,
    MixtureModel,
    model_hash,
)

GENERATOR_NAME = "philox"

__all__ = [
    "Trajectory",
    "derive_rng",
    "derive_trial_seed",
    "sample_future",
    "sample_past",
    "sample_past_batch",
    "reverse_kernel",
    "GENERATOR_NAME",
]


def derive_rng(seed: int, *stream: int) -> np.random.Generator:
    """Counter-based generator for a (seed, stream...) key."""
    ss = np.random.SeedSequence([int(seed), *map(int, stream)])
    return np.random.Generator(np.random.Philox(ss))


def derive_trial_seed(base_seed: int, trial_index: int) -> int:
    """Stable 64-bit per-trial seed; distinct trials get distinct streams."""
    ss = np.random.SeedSequence([int(base_seed), int(trial_index)])
    return int(ss.generate_state(1, np.uint64)[0])


@dataclass(frozen=True)
class Trajectory:
    """A finite sample path: future symbols, optional past window, and the
    provenance needed to regenerate it."""

    future: tuple
    seed: int
    model_id: str
    past: tuple | None = None
    component: int | None = None


def _inverse_cdf(cum: np.ndarray, u) -> np.ndarray:
    return np.searchsorted(cum, u, side="right").astype(np.int64)


def _cum_rows(P: np.ndarray) -> np.ndarray:
    cum = np.cumsum(P, axis=1)
    cum[:, -1] = 1.0
    return cum


def _cum_vec(p: np.ndarray) -> np.ndarray:
    cum = np.cumsum(p)
    cum[-1] = 1.0
    return cum


def _sample_symbols(model, N: int, rng: np.random.Generator) -> np.ndarray:
    if isinstance(model, BernoulliModel):
        return _inverse_cdf(_cum_vec(model.p), rng.random(N))
    if isinstance(model, MarkovModel):
        u = rng.random(N)
        cum_pi = _cum_vec(model.pi)
        cum_rows = _cum_rows(model.P)
        x = np.empty(N, dtype=np.int64)
        x[0] = np.searchsorted(cum_pi, u[0], side="right")
        cur = x[0]
        for t in range(1, N):
            cur = np.searchsorted(cum_rows[cur], u[t], side="right")
            x[t] = cur
        return x
    if isinstance(model, BlockGibbsModel):
        m = model.block_len
        cum_pi = _cum_vec(model.pi_block)
        cum_rows = _cum_rows(model.P_block)
        n_blocks = max(1, N - m + 1)
        u = rng.random(n_blocks)
        b = np.searchsorted(cum_pi, u[0], side="right")
        symbols = list(model.blocks[b])
        for t in range(1, n_blocks):
            b = np.searchsorted(cum_rows[b], u[t], side="right")
            symbols.append(model.blocks[b][-1])
        return np.asarray(symbols[:N], dtype=np.int64)
    raise UnsupportedModelError(f"cannot sample symbols from {type(model).__name__}")


def sample_future(model: MeasureModel, N: int, seed: int) -> Trajectory:
    """Draw N forward symbols; mixtures pick one ergodic component per
    trajectory and record which."""
    if N < 1:
        raise ValueError("N must be >= 1")
    rng = derive_rng(seed)
    component = None
    target = model
    if isinstance(model, MixtureModel):
        cum_w = _cum_vec(model.weights)
        component = int(np.searchsorted(cum_w, rng.random(), side="right"))
        target = model.components[component]
    x = _sample_symbols(target, N, rng)
    return Trajectory(
        future=tuple(int(v) for v in x),
        seed=int(seed),
        model_id=model_hash(model),
        component=component,
    )


def reverse_kernel(model) -> np.ndarray:
    """Time-reversed transition matrix of the model's conditioning chain."""
    if isinstance(model, MarkovModel):
        P, pi = model.P, model.pi
    elif isinstance(model, BlockGibbsModel):
        P, pi = model.P_block, model.pi_block
    elif isinstance(model, BernoulliModel):
        P, pi = np.tile(model.p, (model.k, 1)), model.p
    else:
        raise UnsupportedModelError(
            "reverse kernel is only defined for a single ergodic component"
        )
    return (pi[None, :] * P.T) / pi[:, None]


def sample_past_batch(model, n: int, count: int, seed: int) -> np.ndarray:
    """``count`` independent past windows of length ``n``, rows chronological
    (column -1 is the symbol just before time zero)."""
    if n < 1:
        raise ValueError("window length must be >= 1")
    if isinstance(model, MixtureModel):
        raise UnsupportedModelError(
            "mixture pasts depend on the component; sample the component first"
        )
    rng = derive_rng(seed, 1)
    if isinstance(model, BernoulliModel):
        u = rng.random((count, n))
        flat = _inverse_cdf(_cum_vec(model.p), u.ravel())
        return flat.reshape(count, n)[:, ::-1].copy()
    if isinstance(model, MarkovModel):
        out = np.empty((count, n), dtype=np.int64)
        cur = _inverse_cdf(_cum_vec(model.pi), rng.random(count))
        out[:, n - 1] = cur
        if n > 1:
            cum_rev = _cum_rows(reverse_kernel(model))
            for j in range(n - 2, -1, -1):
                rows = cum_rev[cur]
                cur = (rows < rng.random(count)[:, None]).sum(axis=1)
                out[:, j] = cur
        return out
    if isinstance(model, BlockGibbsModel):
        m = model.block_len
        block_syms = np.asarray(model.blocks, dtype=np.int64)
        cur = _inverse_cdf(_cum_vec(model.pi_block), rng.random(count))
        if n <= m:
            return block_syms[cur][:, m - n :].copy()
        out = np.empty((count, n), dtype=np.int64)
        out[:, n - m :] = block_syms[cur]
        cum_rev = _cum_rows(reverse_kernel(model))
        for j in range(n - m - 1, -1, -1):
            rows = cum_rev[cur]
            cur = (rows < rng.random(count)[:, None]).sum(axis=1)
            out[:, j] = block_syms[cur, 0]
        return out
    raise UnsupportedModelError(f"cannot sample pasts from {type(model).__name__}")


def sample_past(model, n: int, seed: int) -> tuple:
    """One past window ``(x_-n, ..., x_-1)`` with the stationary joint law."""
    return tuple(int(v) for v in sample_past_batch(model, n, 1, seed)[0])
