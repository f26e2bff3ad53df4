"""Deterministic batteries of generating sets with continuity-safe endpoints.

Weak convergence controls only sets whose boundary carries no limit mass, so
every interval endpoint must stay at least ``CONTINUITY_MARGIN`` away from
each atom value of the limit distribution.  The default battery places
endpoints at midpoints between the sorted distinct atom values (and halfway
past the extremes), enumerating contiguous value groups per word.
"""

from __future__ import annotations

import numpy as np

from .errors import ConfigError
from .jacobian import state_values
from .scenery import GeneratingSet

CONTINUITY_MARGIN = 1e-6

__all__ = ["default_battery", "battery_from_config", "continuity_margin", "CONTINUITY_MARGIN"]


def continuity_margin(model, gset: GeneratingSet) -> float:
    """Distance from the interval endpoints to the nearest atom value."""
    vals = state_values(model, gset.e)
    return float(min(np.abs(vals - gset.a).min(), np.abs(vals - gset.b).min()))


def _value_groups(vals: np.ndarray) -> list[float]:
    """Distinct atom values, merging any that sit closer than twice the
    continuity margin (no admissible endpoint fits between them)."""
    groups: list[float] = []
    for v in np.sort(vals):
        if groups and v - groups[-1] < 2 * CONTINUITY_MARGIN:
            continue
        groups.append(float(v))
    return groups


def _boundaries(groups: list[float]) -> list[float]:
    lo = groups[0] - 0.1 if groups[0] < 2 * CONTINUITY_MARGIN else groups[0] / 2.0
    hi = groups[-1] + 0.1 if groups[-1] > 1.0 - 2 * CONTINUITY_MARGIN else (groups[-1] + 1.0) / 2.0
    mids = [(a + b) / 2.0 for a, b in zip(groups, groups[1:])]
    return [lo, *mids, hi]


def default_battery(model, max_word_len: int = 3, count: int = 20) -> list[GeneratingSet]:
    """A fixed, model-derived battery: for each word up to the given length,
    intervals covering every contiguous group of atom values, interleaved
    across words and truncated at ``count``."""
    per_word: list[list[GeneratingSet]] = []
    for length in range(1, max_word_len + 1):
        for e in model.alphabet.all_words(length):
            vals = state_values(model, e)
            groups = _value_groups(vals)
            bounds = _boundaries(groups)
            entries = []
            for i in range(len(groups)):
                for j in range(i, len(groups)):
                    entries.append(GeneratingSet(e, bounds[i], bounds[j + 1]))
            per_word.append(entries)
    out: list[GeneratingSet] = []
    layer = 0
    while len(out) < count:
        added = False
        for entries in per_word:
            if layer < len(entries):
                out.append(entries[layer])
                added = True
                if len(out) == count:
                    break
        if not added:
            raise ValueError(f"only {len(out)} admissible generating sets exist, {count} requested")
        layer += 1
    return out


def battery_from_config(raw, model) -> list[GeneratingSet]:
    """Validate explicit battery entries: well-formed words, a < b, and
    endpoints clear of every atom value by the continuity margin."""
    if not isinstance(raw, list) or not raw:
        raise ConfigError("battery must be a nonempty list of {e, a, b} entries")
    out = []
    for i, entry in enumerate(raw):
        if not isinstance(entry, dict) or not {"e", "a", "b"} <= set(entry):
            raise ConfigError(f"battery entry {i} must carry 'e', 'a', 'b'")
        try:
            gset = GeneratingSet(model.alphabet.word(entry["e"]), float(entry["a"]), float(entry["b"]))
        except (TypeError, ValueError) as exc:
            raise ConfigError(f"battery entry {i}: {exc}") from exc
        margin = continuity_margin(model, gset)
        if margin < CONTINUITY_MARGIN:
            raise ConfigError(
                f"battery entry {i}: endpoint within {margin:.2e} of an atom value "
                f"(continuity rule needs {CONTINUITY_MARGIN:g})"
            )
        out.append(gset)
    return out
