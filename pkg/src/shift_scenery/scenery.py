"""Blow-ups of a measure along a trajectory and distributions of them.

The central objects:

* :class:`CylinderVector` - the depth-m fingerprint of a probability measure
  on the sequence space: the masses of all ``k^m`` depth-m cylinders.
* :class:`EmpiricalDistribution` - a finite weighted set of such fingerprints;
  the computable stand-in for a distribution on the space of measures.
* :func:`minimeasure` - the measure conditioned on a finite prefix and
  renormalized; :func:`scenery_distribution` averages the first N of these
  along a trajectory.
* :func:`blowup_distribution` - the exact limit of the scenery averages for
  chain-structured models: one atom per conditioning state, weighted by its
  stationary mass.
* :func:`distribution_distance` - exact optimal-transport (W1) distance
  between two atom distributions under a summable per-depth L1 ground metric.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy.optimize import linprog
from scipy.spatial.distance import cdist

from .errors import ShiftSceneryError, UnsupportedModelError, ZeroMeasurePrefixError
from .models import MeasureModel, MixtureModel
from .sampling import Trajectory

ATOM_MERGE_TOL = 1e-12
DISTANCE_MERGE_RADIUS = 1e-9
MAX_TRANSPORT_ATOMS = 256

__all__ = [
    "CylinderVector",
    "GeneratingSet",
    "EmpiricalDistribution",
    "minimeasure",
    "scenery_distribution",
    "scenery_checkpoints",
    "blowup_distribution",
    "evaluate_generating_set",
    "distribution_distance",
]


class CylinderVector:
    """Masses of all depth-m cylinders of one measure, in cylinder-index
    order; nonnegative and summing to 1 within 1e-10."""

    __slots__ = ("k", "depth", "probs")

    def __init__(self, k: int, depth: int, probs):
        probs = np.asarray(probs, dtype=float)
        if probs.shape != (k**depth,):
            raise ValueError(f"expected {k**depth} entries for k={k}, depth={depth}")
        if np.any(probs < -1e-12):
            raise ValueError("cylinder masses must be nonnegative")
        if abs(probs.sum() - 1.0) > 1e-10:
            raise ValueError(f"cylinder masses sum to {probs.sum()!r}, not 1")
        self.k = k
        self.depth = depth
        self.probs = np.maximum(probs, 0.0)
        self.probs.setflags(write=False)

    def value(self, word) -> float:
        """Mass of the cylinder of a word of length <= depth (marginal sum)."""
        word = tuple(word)
        if len(word) > self.depth:
            raise ValueError(f"word of length {len(word)} deeper than fingerprint {self.depth}")
        idx = 0
        for s in word:
            idx = idx * self.k + s
        width = self.k ** (self.depth - len(word))
        return float(self.probs[idx * width : (idx + 1) * width].sum())

    def marginal(self, level: int) -> np.ndarray:
        if not 0 <= level <= self.depth:
            raise ValueError("marginal level out of range")
        return self.probs.reshape(self.k**level, -1).sum(axis=1)

    def sup_diff(self, other: "CylinderVector") -> float:
        return float(np.abs(self.probs - other.probs).max())

    def __repr__(self):
        return f"CylinderVector(k={self.k}, depth={self.depth})"


@dataclass(frozen=True)
class GeneratingSet:
    """Measures whose mass of the cylinder [e] lies strictly in (a, b)."""

    e: tuple
    a: float
    b: float

    def __post_init__(self):
        object.__setattr__(self, "e", tuple(self.e))
        if not self.a < self.b:
            raise ValueError(f"need a < b, got ({self.a}, {self.b})")

    def contains(self, value: float) -> bool:
        return self.a < value < self.b


def _lex_merge(vectors: np.ndarray, weights: np.ndarray, tol: float):
    """Cluster near-identical rows (sup distance <= tol), summing weights.

    Rows are sorted lexicographically first, so the result is independent of
    input order; each cluster is replaced by its weighted mean.
    """
    order = np.lexsort(vectors.T[::-1])
    vectors = vectors[order]
    weights = weights[order]
    out_vecs = []
    out_wts = []
    rep = None
    for row, w in zip(vectors, weights):
        if rep is not None and np.abs(row - rep).max() <= tol:
            out_vecs[-1] += w * row
            out_wts[-1] += w
        else:
            rep = row
            out_vecs.append(w * row.copy())
            out_wts.append(w)
    wts = np.asarray(out_wts)
    vecs = np.asarray(out_vecs) / wts[:, None]
    return vecs, wts


class EmpiricalDistribution:
    """Weighted atoms of cylinder fingerprints, all at one depth."""

    def __init__(self, k: int, depth: int, vectors, weights):
        vectors = np.asarray(vectors, dtype=float)
        weights = np.asarray(weights, dtype=float)
        if vectors.ndim != 2 or vectors.shape[1] != k**depth:
            raise ValueError(f"atom matrix must be (n, {k**depth})")
        if weights.shape != (vectors.shape[0],) or vectors.shape[0] == 0:
            raise ValueError("need one positive weight per atom")
        if np.any(weights <= 0):
            raise ValueError("atom weights must be positive")
        if abs(weights.sum() - 1.0) > 1e-10:
            raise ValueError(f"atom weights sum to {weights.sum()!r}, not 1")
        self.k = k
        self.depth = depth
        self.vectors = vectors
        self.weights = weights
        self.vectors.setflags(write=False)
        self.weights.setflags(write=False)

    @classmethod
    def from_atoms(cls, atoms) -> "EmpiricalDistribution":
        """Build from (CylinderVector, weight) pairs."""
        atoms = list(atoms)
        cv = atoms[0][0]
        vectors = np.stack([a.probs for a, _ in atoms])
        weights = np.array([w for _, w in atoms], dtype=float)
        return cls(cv.k, cv.depth, vectors, weights)

    @property
    def atoms(self):
        return [
            (CylinderVector(self.k, self.depth, v), float(w))
            for v, w in zip(self.vectors, self.weights)
        ]

    def __len__(self):
        return len(self.weights)

    def merged(self, tol: float = ATOM_MERGE_TOL) -> "EmpiricalDistribution":
        vecs, wts = _lex_merge(self.vectors, self.weights, tol)
        return EmpiricalDistribution(self.k, self.depth, vecs, wts)

    def atom_values(self, word) -> np.ndarray:
        """Cylinder mass of a word under every atom (marginal sums)."""
        word = tuple(word)
        if len(word) > self.depth:
            raise ValueError(f"word of length {len(word)} deeper than fingerprint {self.depth}")
        idx = 0
        for s in word:
            idx = idx * self.k + s
        width = self.k ** (self.depth - len(word))
        return self.vectors[:, idx * width : (idx + 1) * width].sum(axis=1)

    def evaluate(self, gset: GeneratingSet) -> float:
        """Total weight of atoms whose [e]-mass lies strictly in (a, b)."""
        vals = self.atom_values(gset.e)
        hit = (gset.a < vals) & (vals < gset.b)
        return float(self.weights[hit].sum())

    def export_rows(self):
        """One row per atom: depth, weight, then the k^depth masses."""
        return [
            [self.depth, float(w)] + [float(v) for v in vec]
            for vec, w in zip(self.vectors, self.weights)
        ]


def evaluate_generating_set(dist: EmpiricalDistribution, gset: GeneratingSet) -> float:
    return dist.evaluate(gset)


# ---------------------------------------------------------------------------
# blow-ups along a trajectory


def _mixture_posteriors(model: MixtureModel, prefix) -> np.ndarray:
    logs = np.array(
        [math.log(w) + c.log_cylinder_measure(prefix) for w, c in zip(model.weights, model.components)]
    )
    top = logs.max()
    if top == -math.inf:
        raise ZeroMeasurePrefixError(f"prefix of length {len(prefix)} has zero measure")
    post = np.exp(logs - top)
    return post / post.sum()


def _conditional_row(model: MeasureModel, prefix, depth: int) -> np.ndarray:
    """mu[prefix . e] / mu[prefix] over all depth-words e, unnormalized in
    the sense that float rounding may leave the sum within ~1e-14 of 1."""
    if isinstance(model, MixtureModel):
        post = _mixture_posteriors(model, prefix)
        row = np.zeros(model.k**depth)
        for alpha, comp in zip(post, model.components):
            if alpha > 0.0:
                window = prefix[-comp.block_len :] if comp.block_len else ()
                if len(prefix) < comp.block_len:
                    window = tuple(prefix)
                row += alpha * comp.conditional_distribution(window, depth)
        return row
    window = tuple(prefix)
    if model.block_len and len(window) > model.block_len:
        window = window[-model.block_len :]
    return np.asarray(model.conditional_distribution(window, depth), dtype=float)


def minimeasure(model: MeasureModel, prefix, depth: int) -> CylinderVector:
    """The measure conditioned on the cylinder of ``prefix``, renormalized,
    fingerprinted at the requested depth.

    Raises :class:`ZeroMeasurePrefixError` when the prefix cylinder has zero
    mass (the blow-up is undefined there).
    """
    prefix = model.alphabet.word(prefix)
    if model.log_cylinder_measure(prefix) == -math.inf:
        raise ZeroMeasurePrefixError(f"prefix {prefix} has zero measure")
    row = _conditional_row(model, prefix, depth)
    total = row.sum()
    if abs(total - 1.0) > 1e-12:
        raise ShiftSceneryError(f"conditional failed to normalize (residual {abs(total-1.0):.3e})")
    return CylinderVector(model.k, depth, row / total)


def _ergodic_scenery(model, x: np.ndarray, checkpoints, depth):
    m = model.block_len
    if len(x) > 1:
        # Blow-ups are undefined on zero-measure prefixes.
        inc = model.log_increment_series(x)
        if np.isneginf(inc[: len(x) - 1]).any():
            raise ZeroMeasurePrefixError("trajectory leaves the model support")
    series = model.condition_state_series(x) if len(x) >= m else np.empty(0, np.int64)
    states, _ = model.condition_states()
    state_vecs = np.stack([model.conditional_distribution(s, depth) for s in states])
    out = []
    for N in checkpoints:
        rows = []
        wts = []
        for n in range(min(m, N)):  # short prefixes, marginalized windows
            rows.append(_conditional_row(model, tuple(int(v) for v in x[:n]), depth))
            wts.append(1.0 / N)
        if N > m:
            counts = np.bincount(series[: N - m], minlength=len(states))
            live = np.flatnonzero(counts)
            rows.extend(state_vecs[live])
            wts.extend(counts[live] / N)
        vecs, w = _lex_merge(np.asarray(rows), np.asarray(wts), ATOM_MERGE_TOL)
        out.append(EmpiricalDistribution(model.k, depth, vecs, w))
    return out


def _mixture_scenery(model: MixtureModel, x: np.ndarray, checkpoints, depth):
    N_max = max(checkpoints)
    C = len(model.components)
    logmu = np.zeros((C, N_max))  # log mu_c[x[:n]] for n = 0..N_max-1
    for ci, comp in enumerate(model.components):
        inc = comp.log_increment_series(x[:N_max])
        logmu[ci, 1:] = np.cumsum(inc[: N_max - 1])
    logmu += np.log(model.weights)[:, None]
    top = logmu.max(axis=0)
    if np.any(top == -math.inf):
        raise ZeroMeasurePrefixError("trajectory leaves the mixture's support")
    alpha = np.exp(logmu - top[None, :])
    alpha /= alpha.sum(axis=0, keepdims=True)

    combined = np.zeros((N_max, model.k**depth))
    for ci, comp in enumerate(model.components):
        m = comp.block_len
        rows = np.zeros((N_max, model.k**depth))
        for n in range(min(m, N_max)):
            if alpha[ci, n] > 0.0:
                rows[n] = comp.conditional_distribution(tuple(int(v) for v in x[:n]), depth)
        if N_max > m:
            idx = comp.condition_state_series(x[:N_max])[: N_max - m]
            live = idx >= 0
            states, _ = comp.condition_states()
            state_vecs = np.stack([comp.conditional_distribution(s, depth) for s in states])
            block_rows = np.zeros((N_max - m, model.k**depth))
            block_rows[live] = state_vecs[idx[live]]
            dead_used = (~live) & (alpha[ci, m:] > 0.0)
            if np.any(dead_used):
                raise ZeroMeasurePrefixError("component conditioning left its support")
            rows[m:] = block_rows
        combined += alpha[ci][:, None] * rows

    out = []
    for N in checkpoints:
        vecs, w = _lex_merge(combined[:N], np.full(N, 1.0 / N), ATOM_MERGE_TOL)
        out.append(EmpiricalDistribution(model.k, depth, vecs, w))
    return out


def scenery_checkpoints(model: MeasureModel, traj: Trajectory, checkpoints, depth: int):
    """Scenery distributions after each of several prefix counts, sharing one
    pass over the trajectory.  ``checkpoints`` must be increasing."""
    checkpoints = [int(n) for n in checkpoints]
    if not checkpoints or any(n < 1 for n in checkpoints):
        raise ValueError("checkpoints must be positive")
    if any(b <= a for a, b in zip(checkpoints, checkpoints[1:])):
        raise ValueError("checkpoints must be strictly increasing")
    N_max = checkpoints[-1]
    if len(traj.future) < N_max:
        raise ValueError(f"trajectory of length {len(traj.future)} shorter than N={N_max}")
    x = np.asarray(traj.future[:N_max], dtype=np.int64)
    if isinstance(model, MixtureModel):
        return _mixture_scenery(model, x, checkpoints, depth)
    if not model.is_ergodic:
        raise UnsupportedModelError(f"cannot build sceneries for {type(model).__name__}")
    return _ergodic_scenery(model, x, checkpoints, depth)


def scenery_distribution(model: MeasureModel, traj: Trajectory, N: int, depth: int) -> EmpiricalDistribution:
    """Uniform average of the first N blow-ups of the model along the
    trajectory (the n = 0 term is the measure itself), near-duplicate atoms
    merged."""
    return scenery_checkpoints(model, traj, [N], depth)[0]


def blowup_distribution(model, depth: int) -> EmpiricalDistribution:
    """One atom per conditioning state, weighted by stationary mass: the
    exact limit of the scenery averages for chain-structured models."""
    if isinstance(model, MixtureModel) or not model.is_ergodic:
        raise UnsupportedModelError("blow-up distribution needs a single ergodic component")
    states, masses = model.condition_states()
    vectors = np.stack([model.conditional_distribution(s, depth) for s in states])
    vecs, wts = _lex_merge(vectors, masses, ATOM_MERGE_TOL)
    return EmpiricalDistribution(model.k, depth, vecs, wts)


# ---------------------------------------------------------------------------
# distance between distributions of measures


def _features(vectors: np.ndarray, k: int, depth: int) -> np.ndarray:
    """Per-atom feature vectors whose L1 distance is the ground metric
    rho(v, v') = sum_l 2^-l * 1/2 * sum_{|w|=l} |v[w] - v'[w]|."""
    feats = []
    for level in range(1, depth + 1):
        marg = vectors.reshape(len(vectors), k**level, -1).sum(axis=2)
        feats.append(marg * (0.5 * 2.0**-level))
    return np.concatenate(feats, axis=1)


def ground_metric(v1: CylinderVector, v2: CylinderVector) -> float:
    """rho distance between two cylinder fingerprints (bounded by 1)."""
    if v1.depth != v2.depth or v1.k != v2.k:
        raise ValueError("fingerprints must share alphabet and depth")
    stack = np.stack([v1.probs, v2.probs])
    f = _features(stack, v1.k, v1.depth)
    return float(np.abs(f[0] - f[1]).sum())


def _agglomerate(feats, vectors, weights, radius):
    """Repeatedly merge the closest pair while it is within the radius."""
    feats = list(feats)
    vectors = list(vectors)
    weights = list(weights)
    while len(feats) > 1:
        F = np.asarray(feats)
        D = cdist(F, F, "cityblock")
        np.fill_diagonal(D, np.inf)
        i, j = np.unravel_index(np.argmin(D), D.shape)
        if D[i, j] > radius:
            break
        if i > j:
            i, j = j, i
        wi, wj = weights[i], weights[j]
        vectors[i] = (wi * vectors[i] + wj * vectors[j]) / (wi + wj)
        feats[i] = (wi * feats[i] + wj * feats[j]) / (wi + wj)
        weights[i] = wi + wj
        del vectors[j], feats[j], weights[j]
    return np.asarray(feats), np.asarray(vectors), np.asarray(weights)


def distribution_distance(
    d1: EmpiricalDistribution,
    d2: EmpiricalDistribution,
    merge_radius: float = DISTANCE_MERGE_RADIUS,
    max_atoms: int = MAX_TRANSPORT_ATOMS,
) -> float:
    """Exact W1 optimal-transport distance between two atom distributions
    under the ground metric rho.

    Near-duplicate atoms (rho <= merge_radius) are agglomerated first; if
    either side still exceeds ``max_atoms`` the problem is refused rather
    than solved approximately.
    """
    if d1.depth != d2.depth or d1.k != d2.k:
        raise ValueError("distributions must share alphabet and depth")

    sides = []
    for d in (d1, d2):
        vecs, wts = _lex_merge(d.vectors, d.weights, ATOM_MERGE_TOL)
        feats = _features(vecs, d.k, d.depth)
        feats, vecs, wts = _agglomerate(feats, vecs, wts, merge_radius)
        if len(wts) > max_atoms:
            raise ShiftSceneryError(
                f"{len(wts)} atoms remain after merging (cap {max_atoms})"
            )
        sides.append((feats, wts))
    (f1, w1), (f2, w2) = sides

    cost = cdist(f1, f2, "cityblock")
    if len(w1) == 1:
        return float(cost[0] @ w2)
    if len(w2) == 1:
        return float(cost[:, 0] @ w1)

    n1, n2 = len(w1), len(w2)
    # Transportation LP: row sums w1, column sums w2 (last column constraint
    # dropped as redundant).
    a_rows = []
    b_vals = []
    for i in range(n1):
        row = np.zeros(n1 * n2)
        row[i * n2 : (i + 1) * n2] = 1.0
        a_rows.append(row)
        b_vals.append(w1[i])
    for j in range(n2 - 1):
        col = np.zeros(n1 * n2)
        col[j::n2] = 1.0
        a_rows.append(col)
        b_vals.append(w2[j])
    res = linprog(
        cost.ravel(),
        A_eq=np.asarray(a_rows),
        b_eq=np.asarray(b_vals),
        bounds=(0, None),
        method="highs",
    )
    if not res.success:
        raise ShiftSceneryError(f"transport solve failed: {res.message}")
    return float(res.fun)
