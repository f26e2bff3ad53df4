"""Backward conditional probabilities and the limit distribution's mass.

``g_n`` is the conditional probability of the most recent symbol given the
``n - 1`` before it, extended by 0 off the support.  For chain-structured
models it stabilizes once the window covers the model's range, giving the
limit function ``g_limit`` (a function of the last ``block_len + 1`` symbols)
and, by multiplying along a spliced word, ``g_word_limit``.

That product is what the limit of the scenery averages charges: the mass the
limit distribution gives a generating set equals the stationary probability
that the product lands strictly inside the interval.  Two routes compute it:
exact enumeration over conditioning states, and Monte Carlo over sampled
pasts.
"""

from __future__ import annotations

import math

import numpy as np

from .errors import UnsupportedModelError
from .models import BernoulliModel, BlockGibbsModel, MarkovModel, MeasureModel
from .sampling import sample_past_batch
from .scenery import GeneratingSet

__all__ = [
    "g_n",
    "g_limit",
    "g_word_n",
    "g_word_limit",
    "state_values",
    "limit_mass_exact",
    "limit_mass_montecarlo",
]


def g_n(model: MeasureModel, window) -> float:
    """mu[window] / mu[window without its last symbol]; 0 off support."""
    window = model.alphabet.word(window)
    if not window:
        raise ValueError("g_n needs a nonempty window")
    num = model.log_cylinder_measure(window)
    if num == -math.inf:
        return 0.0
    den = model.log_cylinder_measure(window[:-1])
    return float(math.exp(num - den))


def _require_ergodic(model) -> int:
    if not model.is_ergodic:
        raise UnsupportedModelError(
            "limit values need a single ergodic component (mixtures have none)"
        )
    return model.block_len


def g_limit(model, window) -> float:
    """The stabilized value of g_n: a function of the window's last
    ``block_len + 1`` symbols, 0 off support."""
    m = _require_ergodic(model)
    window = model.alphabet.word(window)
    if len(window) < m + 1:
        raise ValueError(f"window of length {len(window)} shorter than the model range {m + 1}")
    if model.log_cylinder_measure(window) == -math.inf:
        return 0.0
    prev = window[len(window) - m - 1 : -1]
    return float(model.conditional_distribution(prev, 1)[window[-1]])


def g_word_n(model: MeasureModel, window, e) -> float:
    """mu[window . e] / mu[window]; 0 when the window is off support."""
    window = model.alphabet.word(window)
    e = model.alphabet.word(e)
    den = model.log_cylinder_measure(window)
    if den == -math.inf:
        return 0.0
    if not e:
        return 1.0
    num = model.log_cylinder_measure(window + e)
    if num == -math.inf:
        return 0.0
    return float(math.exp(num - den))


def g_word_limit(model, window, e) -> float:
    """Product of g_limit along the spliced word: the stabilized value of
    g_word_n once the window covers the model's conditioning length."""
    m = _require_ergodic(model)
    window = model.alphabet.word(window)
    e = model.alphabet.word(e)
    if len(window) < m:
        raise ValueError(f"window of length {len(window)} shorter than block length {m}")
    if model.log_cylinder_measure(window) == -math.inf:
        return 0.0
    out = 1.0
    for j in range(1, len(e) + 1):
        out *= g_limit(model, window + e[:j])
        if out == 0.0:
            return 0.0
    return float(out)


def state_values(model, e) -> np.ndarray:
    """g_word_limit of the word ``e`` at every conditioning state."""
    _require_ergodic(model)
    states, _ = model.condition_states()
    return np.array([g_word_limit(model, s, e) for s in states])


def limit_mass_exact(model, gset: GeneratingSet) -> float:
    """Mass the limit distribution gives a generating set, by enumerating
    conditioning states: the stationary weight of states whose word value
    lies strictly inside (a, b)."""
    _require_ergodic(model)
    _, masses = model.condition_states()
    vals = state_values(model, gset.e)
    hit = (gset.a < vals) & (vals < gset.b)
    return float(masses[hit].sum())


def _window_state_indices(model, windows: np.ndarray) -> np.ndarray:
    if model.block_len == 0:
        return np.zeros(len(windows), dtype=np.int64)
    m = model.block_len
    if windows.shape[1] < m:
        raise ValueError("sampled windows shorter than the conditioning length")
    code = np.zeros(len(windows), dtype=np.int64)
    for i in range(m):
        code = code * model.k + windows[:, windows.shape[1] - m + i]
    if isinstance(model, MarkovModel):
        return code
    if isinstance(model, BlockGibbsModel):
        return model._block_of_code[code]
    raise UnsupportedModelError(f"no conditioning states for {type(model).__name__}")


def limit_mass_montecarlo(
    model,
    gset: GeneratingSet,
    samples: int,
    seed: int,
    window_len: int | None = None,
) -> tuple[float, float]:
    """Monte Carlo estimate of :func:`limit_mass_exact` by sampling pasts:
    hit fraction of the stabilized word value, with binomial standard error.

    ``window_len`` defaults to the conditioning length; longer windows change
    nothing for chain-structured models (the value is locally constant) but
    are accepted for comparison runs.
    """
    m = _require_ergodic(model)
    if samples < 1:
        raise ValueError("samples must be >= 1")
    n = max(m, 1) if window_len is None else int(window_len)
    if n < max(m, 1):
        raise ValueError(f"window_len must be at least {max(m, 1)}")
    windows = sample_past_batch(model, n, samples, seed)
    idx = _window_state_indices(model, windows)
    vals = state_values(model, gset.e)
    hits = (gset.a < vals[idx]) & (vals[idx] < gset.b)
    est = float(hits.mean())
    se = math.sqrt(est * (1.0 - est) / samples)
    return est, se
