"""Shift-invariant measures with exact cylinder probabilities.

Four model families share one interface: i.i.d. product measures, stationary
chains, chains compiled from a finite-range potential table via its dominant
transfer-operator eigendata, and convex mixtures of the former three.  Every
family answers ``cylinder_measure(w)`` exactly (up to float rounding), and the
chain-structured families additionally expose their conditioning states: the
minimal suffix of a prefix that determines the conditional law of the future.

Conventions
-----------
* Words are tuples of ints in ``0..k-1`` (see :mod:`shift_scenery.words`).
* A "window" is the suffix of a prefix used for conditioning; its length is
  at most ``block_len`` (0 for i.i.d., 1 for a chain, ``r - 1`` for a
  range-``r`` potential).
* Stationary vectors are always recomputed from the transition structure,
  never trusted from input.
"""

from __future__ import annotations

import hashlib
import json
import math
from dataclasses import dataclass
from typing import Iterable, Sequence

import numpy as np

from .errors import ConfigError, InvalidModelError, UnsupportedModelError
from .words import Alphabet, Word

ROW_SUM_TOL = 1e-12
STATIONARY_TOL = 1e-12
POWER_TOL = 1e-14
POWER_MAX_ITER = 10**6

__all__ = [
    "BernoulliModel",
    "MarkovModel",
    "BlockGibbsModel",
    "MixtureModel",
    "MeasureModel",
    "stationary_distribution",
    "perron_eigendata",
    "cylinder_measure",
    "log_cylinder_measure",
    "two_sided_cylinder_measure",
    "compile_block_gibbs",
    "validate_model",
    "model_from_dict",
    "model_to_dict",
    "model_hash",
    "ValidationReport",
]


# ---------------------------------------------------------------------------
# linear-algebra helpers


def _as_square_matrix(P, name: str = "P") -> np.ndarray:
    M = np.asarray(P, dtype=float)
    if M.ndim != 2 or M.shape[0] != M.shape[1] or M.shape[0] == 0:
        raise InvalidModelError(f"{name} must be a nonempty square matrix, got shape {M.shape}")
    return M


def _check_stochastic(P: np.ndarray, name: str = "P") -> None:
    if np.any(P < 0) or not np.all(np.isfinite(P)):
        raise InvalidModelError(f"{name} has negative or non-finite entries")
    row_err = np.abs(P.sum(axis=1) - 1.0).max()
    if row_err > ROW_SUM_TOL:
        raise InvalidModelError(
            f"{name} rows must sum to 1 within {ROW_SUM_TOL:g} (worst residual {row_err:.3e})"
        )


def _strongly_connected(adj: np.ndarray) -> bool:
    """Is the digraph of a boolean adjacency matrix strongly connected?"""
    n = adj.shape[0]

    def reachable(A):
        seen = np.zeros(n, dtype=bool)
        seen[0] = True
        frontier = [0]
        while frontier:
            nxt = []
            for u in frontier:
                for v in np.flatnonzero(A[u]):
                    if not seen[v]:
                        seen[v] = True
                        nxt.append(v)
            frontier = nxt
        return seen

    return bool(reachable(adj).all() and reachable(adj.T).all())


def chain_period(P: np.ndarray) -> int:
    """Period of an irreducible chain: gcd of cycle-length differences."""
    n = P.shape[0]
    adj = P > 0
    level = np.full(n, -1)
    level[0] = 0
    frontier = [0]
    g = 0
    while frontier:
        nxt = []
        for u in frontier:
            for v in np.flatnonzero(adj[u]):
                if level[v] < 0:
                    level[v] = level[u] + 1
                    nxt.append(v)
                else:
                    g = math.gcd(g, level[u] + 1 - level[v])
        frontier = nxt
    return g if g > 0 else 1


def stationary_distribution(P) -> np.ndarray:
    """Unique left eigenvector pi with ``pi P = pi`` and ``sum(pi) = 1``.

    Requires each row of ``P`` to sum to 1 within 1e-12 and the positive-entry
    digraph to be strongly connected; the returned vector has residual
    ``max|pi P - pi| < 1e-12`` and strictly positive entries.
    """
    M = _as_square_matrix(P)
    _check_stochastic(M)
    if not _strongly_connected(M > 0):
        raise InvalidModelError("transition matrix is reducible")
    n = M.shape[0]
    A = M.T - np.eye(n)
    A[-1, :] = 1.0
    b = np.zeros(n)
    b[-1] = 1.0
    pi = np.linalg.solve(A, b)
    # Polish with left power steps if the direct solve is marginal.
    for _ in range(64):
        resid = np.abs(pi @ M - pi).max()
        if resid < STATIONARY_TOL:
            break
        pi = pi @ M
        pi = pi / pi.sum()
    else:
        raise InvalidModelError(f"stationary solve residual {resid:.3e} exceeds {STATIONARY_TOL:g}")
    if np.any(pi <= 0):
        raise InvalidModelError("stationary vector has a non-positive entry")
    return pi


def perron_eigendata(L) -> tuple[float, np.ndarray]:
    """Dominant eigenvalue and positive right eigenvector of an irreducible
    nonnegative matrix.

    Power iteration from the all-ones vector, normalized to unit sum, stopping
    when successive iterates agree to 1e-14 in sup norm (cap 1e6 iterations).
    A diagonal shift keeps the iteration convergent for periodic matrices; it
    adds exactly the shift to the eigenvalue and leaves eigenvectors alone.
    """
    M = _as_square_matrix(L, "L")
    if np.any(M < 0):
        raise InvalidModelError("transfer matrix has negative entries")
    if not _strongly_connected(M > 0):
        raise InvalidModelError("transfer matrix is reducible")
    n = M.shape[0]
    shift = float(M.max())
    shifted = M + shift * np.eye(n)
    v = np.full(n, 1.0 / n)
    for _ in range(POWER_MAX_ITER):
        w = shifted @ v
        s = w.sum()
        w /= s
        if np.abs(w - v).max() < POWER_TOL:
            return float(s - shift), w
        v = w
    raise InvalidModelError(
        f"power iteration did not reach {POWER_TOL:g} within {POWER_MAX_ITER} iterations"
    )


# ---------------------------------------------------------------------------
# model classes


class MeasureModel:
    """Common surface of all model families."""

    kind: str = "abstract"
    k: int
    alphabet: Alphabet
    #: length of the conditioning window; None for mixtures
    block_len: int | None = None

    # -- measures ---------------------------------------------------------

    def cylinder_measure(self, w: Sequence[int]) -> float:
        raise NotImplementedError

    def log_cylinder_measure(self, w: Sequence[int]) -> float:
        raise NotImplementedError

    def describe(self) -> dict:
        raise NotImplementedError

    def distribution_vector(self, depth: int) -> np.ndarray:
        """Probabilities of all depth-``depth`` cylinders, index order."""
        raise NotImplementedError

    @property
    def is_ergodic(self) -> bool:
        return self.block_len is not None

    def _word(self, w) -> Word:
        return self.alphabet.word(w)


class _ChainStructured(MeasureModel):
    """Shared machinery for the ergodic families.

    Subclasses provide the conditioning-state set and per-state transition
    data; everything here is derived from those.
    """

    # Filled by subclasses:
    #   self._states: list of window tuples (length block_len)
    #   self._state_mass: np.ndarray of their stationary masses

    def condition_states(self) -> tuple[list[Word], np.ndarray]:
        """Conditioning windows with positive stationary mass."""
        return list(self._states), self._state_mass.copy()

    def conditional_distribution(self, window: Sequence[int], depth: int) -> np.ndarray:
        """Conditional cylinder vector mu[window . e] / mu[window] over all
        words e of the given depth.

        ``window`` may be shorter than ``block_len`` (including empty), in
        which case the unseen part of the window is marginalized out.
        """
        window = self._word(window)
        if self.block_len and len(window) > self.block_len:
            window = window[-self.block_len :]
        cache = self._cond_cache
        key = (window, depth)
        hit = cache.get(key)
        if hit is None:
            hit = self._conditional_uncached(window, depth)
            hit.setflags(write=False)
            cache[key] = hit
        return hit

    def distribution_vector(self, depth: int) -> np.ndarray:
        return self.conditional_distribution((), depth)

    def _conditional_uncached(self, window: Word, depth: int) -> np.ndarray:
        raise NotImplementedError

    def _marginal_conditional(self, window: Word, depth: int) -> np.ndarray:
        # Fallback for partial windows: direct cylinder ratios.
        den = self.cylinder_measure(window)
        if den <= 0.0:
            raise InvalidModelError(f"window {window} has zero measure")
        out = np.empty(self.k**depth)
        for i, e in enumerate(self.alphabet.all_words(depth)):
            out[i] = self.cylinder_measure(window + e) / den
        return out

    # -- vectorized trajectory helpers (used by the scenery/stats engines) --

    def condition_state_series(self, x: np.ndarray) -> np.ndarray:
        """Index into ``condition_states`` of the window ending at each
        position: entry t is the state of the prefix of length block_len + t.
        """
        raise NotImplementedError

    def log_increment_series(self, x: np.ndarray) -> np.ndarray:
        """Per-step log mu[x[:n+1]] - log mu[x[:n]] along a trajectory."""
        raise NotImplementedError

    def gibbs_constants(self) -> tuple[float, float, float]:
        """(lower, upper, summed-variation) constants of the uniform
        cylinder-vs-Birkhoff comparison for this measure."""
        raise NotImplementedError


class BernoulliModel(_ChainStructured):
    """Product measure from a strictly positive probability vector."""

    kind = "bernoulli"
    block_len = 0

    def __init__(self, p: Iterable[float]):
        p = np.asarray(list(p), dtype=float)
        if p.ndim != 1 or len(p) < 2:
            raise InvalidModelError("p must be a vector of length >= 2")
        if np.any(p <= 0) or not np.all(np.isfinite(p)):
            raise InvalidModelError("Bernoulli weights must be strictly positive")
        if abs(p.sum() - 1.0) > ROW_SUM_TOL:
            raise InvalidModelError(
                f"Bernoulli weights must sum to 1 within {ROW_SUM_TOL:g} (got {p.sum()!r})"
            )
        self.k = len(p)
        self.alphabet = Alphabet(self.k)
        self.p = p
        self.p.setflags(write=False)
        self._log_p = np.log(p)
        self._p_list = p.tolist()
        self._log_p_list = self._log_p.tolist()
        self._states = [()]
        self._state_mass = np.array([1.0])
        self._cond_cache: dict = {}

    def cylinder_measure(self, w) -> float:
        w = self._word(w)
        out = 1.0
        p = self._p_list
        for s in w:
            out *= p[s]
        return out

    def log_cylinder_measure(self, w) -> float:
        w = self._word(w)
        lp = self._log_p_list
        out = 0.0
        for s in w:
            out += lp[s]
        return out

    def _conditional_uncached(self, window, depth):
        out = np.ones(1)
        for _ in range(depth):
            out = np.outer(out, self.p).ravel()
        return out

    def condition_state_series(self, x):
        return np.zeros(len(x) + 1, dtype=np.int64)

    def log_increment_series(self, x):
        return self._log_p[x]

    def gibbs_constants(self):
        # The cylinder/Birkhoff comparison is an identity for products.
        return 1.0, 1.0, 0.0

    def describe(self):
        return {"type": "bernoulli", "p": [float(v) for v in self.p]}


class MarkovModel(_ChainStructured):
    """Stationary chain of an irreducible row-stochastic matrix.

    Zero entries are allowed (they carve out a finite-type support); the
    stationary vector is recomputed and must be strictly positive.
    """

    kind = "markov"
    block_len = 1

    def __init__(self, P):
        P = _as_square_matrix(P)
        _check_stochastic(P)
        if P.shape[0] < 2:
            raise InvalidModelError("chain needs at least 2 states")
        self.k = P.shape[0]
        self.alphabet = Alphabet(self.k)
        self.P = P
        self.P.setflags(write=False)
        self.pi = stationary_distribution(P)
        self.pi.setflags(write=False)
        with np.errstate(divide="ignore"):
            self._log_P = np.log(P)
            self._log_pi = np.log(self.pi)
        self._P_list = P.tolist()
        self._pi_list = self.pi.tolist()
        self._log_P_list = self._log_P.tolist()
        self._log_pi_list = self._log_pi.tolist()
        self._states = [(i,) for i in range(self.k)]
        self._state_mass = self.pi.copy()
        self._cond_cache: dict = {}

    def cylinder_measure(self, w) -> float:
        w = self._word(w)
        if not w:
            return 1.0
        out = self._pi_list[w[0]]
        P = self._P_list
        prev = w[0]
        for s in w[1:]:
            out *= P[prev][s]
            prev = s
        return out

    def log_cylinder_measure(self, w) -> float:
        w = self._word(w)
        if not w:
            return 0.0
        out = self._log_pi_list[w[0]]
        lP = self._log_P_list
        prev = w[0]
        for s in w[1:]:
            out += lP[prev][s]
            prev = s
        return out

    def _conditional_uncached(self, window, depth):
        if depth == 0:
            return np.ones(1)
        if window:
            start = self.P[window[-1]]
        else:
            start = self.pi
        out = np.asarray(start, dtype=float).copy()
        for _ in range(depth - 1):
            out = (out[:, None] * self.P[_last_symbol_axis(out, self.k), :]).ravel()
        return out

    def condition_state_series(self, x):
        return np.asarray(x, dtype=np.int64)

    def log_increment_series(self, x):
        x = np.asarray(x, dtype=np.int64)
        out = np.empty(len(x))
        out[0] = self._log_pi[x[0]]
        if len(x) > 1:
            out[1:] = self._log_P[x[:-1], x[1:]]
        return out

    def gibbs_constants(self):
        allowed = self.P[self.P > 0]
        lower = float(self.pi.min() / allowed.max())
        upper = float(self.pi.max() / allowed.min())
        var1 = 0.0
        for row in self.P:
            pos = row[row > 0]
            var1 = max(var1, float(np.log(pos.max()) - np.log(pos.min())))
        return lower, upper, var1

    def describe(self):
        return {"type": "markov", "P": [[float(v) for v in row] for row in self.P]}


def _last_symbol_axis(vec: np.ndarray, k: int) -> np.ndarray:
    """Last symbol of each word indexed by a length-k^l cylinder vector."""
    return np.arange(len(vec)) % k


class BlockGibbsModel(_ChainStructured):
    """Chain compiled from a finite-range potential table.

    A table ``phi`` over words of length ``r`` (entries may be ``-inf`` to
    forbid transitions) is turned into a stationary chain over the alphabet
    of ``(r-1)``-blocks: with ``L = exp(phi)`` viewed as a matrix over blocks,
    the dominant eigendata ``(lam, rvec)`` give transitions
    ``p(u, v) = L[u, v] rvec[v] / (lam rvec[u])``.  The log of the dominant
    eigenvalue is the growth exponent (``pressure``) normalizing the
    comparison of cylinder masses with Birkhoff sums of ``phi``, and the
    extremes of that comparison over (start state, end state, continuation)
    give the uniform constants ``gibbs_lower <= ratio <= gibbs_upper``.
    """

    kind = "block_gibbs"

    def __init__(self, r: int, phi, strict_mixing: bool = False):
        phi = np.asarray(phi, dtype=float)
        if not isinstance(r, int) or r < 2:
            raise InvalidModelError(f"potential range must be an int >= 2, got {r!r}")
        if phi.ndim != r:
            raise InvalidModelError(f"phi must be an array of rank r={r}, got rank {phi.ndim}")
        k = phi.shape[0]
        if any(s != k for s in phi.shape):
            raise InvalidModelError(f"phi must be a k^r cube, got shape {phi.shape}")
        if np.any(np.isnan(phi)) or np.any(phi == np.inf):
            raise InvalidModelError("phi entries must be finite or -inf")
        self.k = k
        self.alphabet = Alphabet(k)
        self.r = r
        self.block_len = r - 1
        self.phi = phi
        self.phi.setflags(write=False)

        blocks, L = self._build_block_operator(phi, r, k)
        if strict_mixing and chain_period(L) != 1:
            raise InvalidModelError("block transition structure is periodic (strict mixing requested)")
        lam, rvec = perron_eigendata(L)
        P = L * rvec[None, :] / (lam * rvec[:, None])
        row_sums = P.sum(axis=1)
        if np.abs(row_sums - 1.0).max() > 1e-10:
            raise InvalidModelError("compiled transition rows failed to normalize")
        P = P / row_sums[:, None]

        self.blocks = blocks
        self._block_index = {b: i for i, b in enumerate(blocks)}
        self.L = L
        self.L.setflags(write=False)
        self.lam = float(lam)
        self.rvec = rvec
        self.pressure = math.log(lam)
        self.P_block = P
        self.P_block.setflags(write=False)
        self.pi_block = stationary_distribution(P)
        self.pi_block.setflags(write=False)
        with np.errstate(divide="ignore"):
            self._log_P_block = np.log(P)
            self._log_pi_block = np.log(self.pi_block)
        self._P_block_list = P.tolist()
        self._pi_block_list = self.pi_block.tolist()
        self._log_P_block_list = self._log_P_block.tolist()
        self._log_pi_block_list = self._log_pi_block.tolist()
        self._states = list(blocks)
        self._state_mass = self.pi_block.copy()
        self._cond_cache: dict = {}

        # Successor tables: succ[b, c] = block index of (b[1:], c), or -1.
        B = len(blocks)
        succ = np.full((B, self.k), -1, dtype=np.int64)
        for bi, b in enumerate(blocks):
            for c in range(self.k):
                ti = self._block_index.get(b[1:] + (c,), -1)
                if ti >= 0 and L[bi, ti] > 0:
                    succ[bi, c] = ti
        self._succ = succ

        # Raw-encoding lookup (base-k code of a block -> live index, or -1).
        enc = np.full(self.k ** (r - 1), -1, dtype=np.int64)
        for bi, b in enumerate(blocks):
            enc[self.alphabet.cylinder_index(b)] = bi
        self._block_of_code = enc
        self._block_of_code_list = enc.tolist()

        self.gibbs_lower, self.gibbs_upper, self.var_sum = self._gibbs_data()

    @staticmethod
    def _build_block_operator(phi, r, k):
        alphabet = Alphabet(k)
        all_blocks = list(alphabet.all_words(r - 1))
        with np.errstate(over="raise"):
            try:
                weight = np.exp(phi)
            except FloatingPointError as exc:
                raise InvalidModelError("exp(phi) overflows") from exc
        n = len(all_blocks)
        L = np.zeros((n, n))
        for i, u in enumerate(all_blocks):
            for c in range(k):
                j = alphabet.cylinder_index(u[1:] + (c,))
                L[i, j] = weight[u + (c,)]
        # Trim blocks with no allowed way in or out, then demand one class.
        alive = np.ones(n, dtype=bool)
        changed = True
        while changed:
            changed = False
            sub = L[np.ix_(alive, alive)]
            keep = (sub.sum(axis=1) > 0) & (sub.sum(axis=0) > 0)
            if not keep.all():
                idx = np.flatnonzero(alive)
                alive[idx[~keep]] = False
                changed = True
        if not alive.any():
            raise InvalidModelError("potential forbids every bi-infinite path")
        live = np.flatnonzero(alive)
        L = L[np.ix_(live, live)]
        blocks = [all_blocks[i] for i in live]
        if not _strongly_connected(L > 0):
            raise InvalidModelError("block transition structure is not irreducible")
        return blocks, L

    def _gibbs_data(self):
        logL = np.full_like(self.L, -np.inf)
        pos = self.L > 0
        logL[pos] = np.log(self.L[pos])
        lo = math.inf
        hi = -math.inf
        var1 = 0.0
        for j in range(len(self.blocks)):
            row = logL[j][pos[j]]
            var1 = max(var1, float(row.max() - row.min()))
        base = self.pi_block[:, None] / self.rvec[:, None]  # over i
        for j in range(len(self.blocks)):
            for t in np.flatnonzero(pos[j]):
                vals = base * (self.rvec[j] * self.lam / self.L[j, t])
                lo = min(lo, float(vals.min()))
                hi = max(hi, float(vals.max()))
        return lo, hi, var1

    # -- measures ----------------------------------------------------------

    def _block_path(self, w: Word):
        """Live-block indices of the sliding windows of w (len(w) >= r-1)."""
        m = self.block_len
        k = self.k
        lookup = self._block_of_code_list
        code = 0
        for s in w[:m]:
            code = code * k + s
        window_mod = k ** (m - 1)
        out = []
        bi = lookup[code]
        if bi < 0:
            return None
        out.append(bi)
        for t in range(m, len(w)):
            code = (code % window_mod) * k + w[t]
            bi = lookup[code]
            if bi < 0:
                return None
            out.append(bi)
        return out

    def cylinder_measure(self, w) -> float:
        w = self._word(w)
        if not w:
            return 1.0
        m = self.block_len
        if len(w) < m:
            mass = 0.0
            for bi, b in enumerate(self.blocks):
                if b[: len(w)] == w:
                    mass += self._pi_block_list[bi]
            return mass
        path = self._block_path(w)
        if path is None:
            return 0.0
        out = self._pi_block_list[path[0]]
        P = self._P_block_list
        prev = path[0]
        for b in path[1:]:
            out *= P[prev][b]
            prev = b
        return out

    def log_cylinder_measure(self, w) -> float:
        w = self._word(w)
        if not w:
            return 0.0
        if len(w) < self.block_len:
            mass = self.cylinder_measure(w)
            return math.log(mass) if mass > 0 else -math.inf
        path = self._block_path(w)
        if path is None:
            return -math.inf
        out = self._log_pi_block_list[path[0]]
        lP = self._log_P_block_list
        prev = path[0]
        for b in path[1:]:
            out += lP[prev][b]
            prev = b
        return out

    def _conditional_uncached(self, window, depth):
        if len(window) < self.block_len:
            return self._marginal_conditional(window, depth)
        bi = self._block_of_code[self.alphabet.cylinder_index(window)]
        if bi < 0:
            raise InvalidModelError(f"window {window} has zero measure")
        weights = np.ones(1)
        cur = np.array([bi], dtype=np.int64)
        for _ in range(depth):
            nxt = self._succ[cur]  # (n, k)
            step = np.where(nxt >= 0, self.P_block[cur[:, None], np.maximum(nxt, 0)], 0.0)
            weights = (weights[:, None] * step).ravel()
            cur = np.maximum(nxt, 0).ravel()
        return weights

    def condition_state_series(self, x):
        x = np.asarray(x, dtype=np.int64)
        m = self.block_len
        if len(x) < m:
            return np.empty(0, dtype=np.int64)
        code = np.zeros(len(x) - m + 1, dtype=np.int64)
        for i in range(m):
            code = code * self.k + x[i : len(x) - m + 1 + i]
        return self._block_of_code[code]

    def log_increment_series(self, x):
        x = np.asarray(x, dtype=np.int64)
        n = len(x)
        out = np.empty(n)
        m = self.block_len
        prev = 0.0
        for t in range(min(m, n)):
            cur = self.log_cylinder_measure(tuple(int(v) for v in x[: t + 1]))
            out[t] = -math.inf if prev == -math.inf else cur - prev
            prev = cur
        if n > m:
            idx = self.condition_state_series(x)
            a, b = idx[:-1], idx[1:]
            live = (a >= 0) & (b >= 0)
            steps = np.where(
                live, self._log_P_block[np.maximum(a, 0), np.maximum(b, 0)], -math.inf
            )
            out[m:] = steps
        return out

    def gibbs_constants(self):
        return self.gibbs_lower, self.gibbs_upper, self.var_sum

    def describe(self):
        def nest(a):
            if a.ndim == 1:
                return [None if v == -np.inf else float(v) for v in a]
            return [nest(sub) for sub in a]

        return {"type": "block_gibbs", "r": self.r, "phi": nest(self.phi)}


class MixtureModel(MeasureModel):
    """Convex combination of chain-structured models on one alphabet.

    Invariant but deliberately non-ergodic: at least two components must have
    genuinely different cylinder measures.
    """

    kind = "mixture"
    block_len = None

    def __init__(self, weights: Iterable[float], components: Sequence[MeasureModel]):
        weights = np.asarray(list(weights), dtype=float)
        components = list(components)
        if len(components) < 2 or len(weights) != len(components):
            raise InvalidModelError("mixture needs >= 2 components with matching weights")
        if np.any(weights <= 0) or abs(weights.sum() - 1.0) > ROW_SUM_TOL:
            raise InvalidModelError("mixture weights must be positive and sum to 1")
        for c in components:
            if not c.is_ergodic:
                raise InvalidModelError("mixture components must be ergodic models")
        ks = {c.k for c in components}
        if len(ks) != 1:
            raise InvalidModelError("mixture components must share one alphabet")
        self.k = ks.pop()
        self.alphabet = Alphabet(self.k)
        self.weights = weights
        self.weights.setflags(write=False)
        self.components = components
        if self._distinct_classes() < 2:
            raise InvalidModelError("mixture components are all identical; nothing is mixed")

    def _distinct_classes(self) -> int:
        fingerprints = []
        for c in self.components:
            fp = np.concatenate([c.distribution_vector(d) for d in (1, 2, 3)])
            fingerprints.append(fp)
        classes: list[np.ndarray] = []
        for fp in fingerprints:
            if not any(np.abs(fp - ref).max() <= 1e-12 for ref in classes):
                classes.append(fp)
        return len(classes)

    def cylinder_measure(self, w) -> float:
        w = self._word(w)
        return float(sum(wt * c.cylinder_measure(w) for wt, c in zip(self.weights, self.components)))

    def log_cylinder_measure(self, w) -> float:
        w = self._word(w)
        logs = np.array([c.log_cylinder_measure(w) for c in self.components])
        logs = logs + np.log(self.weights)
        top = logs.max()
        if top == -math.inf:
            return -math.inf
        return float(top + math.log(np.exp(logs - top).sum()))

    def distribution_vector(self, depth: int) -> np.ndarray:
        out = np.zeros(self.k**depth)
        for wt, c in zip(self.weights, self.components):
            out += wt * c.distribution_vector(depth)
        return out

    def describe(self):
        return {
            "type": "mixture",
            "weights": [float(v) for v in self.weights],
            "components": [c.describe() for c in self.components],
        }


# ---------------------------------------------------------------------------
# module-level operations


def cylinder_measure(model: MeasureModel, w) -> float:
    """Measure of the cylinder of a finite word; the empty word gives 1."""
    return model.cylinder_measure(w)


def log_cylinder_measure(model: MeasureModel, w) -> float:
    """log of :func:`cylinder_measure`; ``-inf`` exactly off support."""
    return model.log_cylinder_measure(w)


def two_sided_cylinder_measure(model: MeasureModel, w, start_index: int = 0) -> float:
    """Measure of a cylinder anchored at any nonpositive time index.

    Stationarity makes the value independent of the anchor, which is the
    whole content of the two-sided extension: the measure of
    ``[w]_{start}^{start+len(w)-1}`` equals the measure of ``[w]_0^{len(w)-1}``.
    """
    if start_index > 0:
        raise ValueError(f"start_index must be <= 0, got {start_index}")
    return model.cylinder_measure(w)


def compile_block_gibbs(r: int, phi, strict_mixing: bool = False) -> BlockGibbsModel:
    """Compile a finite-range potential table into a stationary chain."""
    return BlockGibbsModel(r, phi, strict_mixing=strict_mixing)


# ---------------------------------------------------------------------------
# validation


@dataclass
class CheckResult:
    name: str
    residual: float
    tolerance: float

    @property
    def passed(self) -> bool:
        return self.residual <= self.tolerance


@dataclass
class ValidationReport:
    checks: list

    @property
    def passed(self) -> bool:
        return all(c.passed for c in self.checks)

    @property
    def worst_residual(self) -> float:
        return max((c.residual for c in self.checks), default=0.0)

    @property
    def failures(self) -> list:
        return [c for c in self.checks if not c.passed]

    def to_text(self) -> str:
        lines = []
        for c in self.checks:
            status = "pass" if c.passed else "FAIL"
            lines.append(f"{status}  {c.name}: residual {c.residual:.3e} (tol {c.tolerance:g})")
        verdict = "PASS" if self.passed else "FAIL"
        lines.append(f"verdict: {verdict} (worst residual {self.worst_residual:.3e})")
        return "\n".join(lines)


def validate_model(model: MeasureModel, max_word_len: int = 6) -> ValidationReport:
    """Exhaustive small-word audit: additivity of cylinder masses, invariance
    under the shift, and normalization per depth.
    """
    k = model.k
    while k**max_word_len > 200_000 and max_word_len > 1:
        max_word_len -= 1
    checks = []
    kol = 0.0
    inv = 0.0
    alphabet = model.alphabet
    for length in range(0, max_word_len):
        for w in alphabet.all_words(length):
            mu = model.cylinder_measure(w)
            ext = sum(model.cylinder_measure(w + (j,)) for j in range(k))
            pre = sum(model.cylinder_measure((i,) + w) for i in range(k))
            kol = max(kol, abs(ext - mu))
            inv = max(inv, abs(pre - mu))
    checks.append(CheckResult("kolmogorov_consistency", kol, 1e-12))
    checks.append(CheckResult("shift_invariance", inv, 1e-12))
    norm = 0.0
    for length in range(1, max_word_len + 1):
        total = model.distribution_vector(length).sum()
        norm = max(norm, abs(total - 1.0))
    checks.append(CheckResult("normalization", norm, 1e-10))
    if isinstance(model, MarkovModel):
        checks.append(
            CheckResult("row_stochastic", float(np.abs(model.P.sum(axis=1) - 1).max()), ROW_SUM_TOL)
        )
        checks.append(
            CheckResult("stationary_residual", float(np.abs(model.pi @ model.P - model.pi).max()), 1e-10)
        )
    if isinstance(model, BernoulliModel):
        checks.append(CheckResult("weight_sum", abs(float(model.p.sum()) - 1.0), ROW_SUM_TOL))
    if isinstance(model, BlockGibbsModel):
        checks.append(
            CheckResult(
                "compiled_row_stochastic",
                float(np.abs(model.P_block.sum(axis=1) - 1).max()),
                ROW_SUM_TOL,
            )
        )
        checks.append(CheckResult("pressure_is_log_lambda", abs(model.pressure - math.log(model.lam)), 0.0))
        ok = 0.0 if (0 < model.gibbs_lower <= model.gibbs_upper < math.inf) else 1.0
        checks.append(CheckResult("gibbs_constants_ordered", ok, 0.0))
    if isinstance(model, MixtureModel):
        checks.append(CheckResult("mixture_weight_sum", abs(float(model.weights.sum()) - 1.0), ROW_SUM_TOL))
    return ValidationReport(checks)


# ---------------------------------------------------------------------------
# serialization


def _parse_phi(raw, r: int) -> np.ndarray:
    def conv(v):
        if v is None or v == "-inf":
            return -math.inf
        if isinstance(v, (int, float)) and not isinstance(v, bool):
            return float(v)
        raise ConfigError(f"phi entries must be numbers, null, or '-inf'; got {v!r}")

    def walk(node, rank):
        if rank == 0:
            return conv(node)
        if not isinstance(node, list):
            raise ConfigError("phi must be nested lists of rank r")
        return [walk(child, rank - 1) for child in node]

    return np.asarray(walk(raw, r), dtype=float)


def model_from_dict(d: dict) -> MeasureModel:
    """Build a model from its file definition.

    Structural problems (missing fields, wrong types) raise
    :class:`ConfigError`; numeric invariant violations raise
    :class:`InvalidModelError`.
    """
    if not isinstance(d, dict):
        raise ConfigError(f"model definition must be an object, got {type(d).__name__}")
    kind = d.get("type")
    if kind == "bernoulli":
        if "p" not in d or not isinstance(d["p"], list):
            raise ConfigError("bernoulli model needs a 'p' list")
        return BernoulliModel(d["p"])
    if kind == "markov":
        if "P" not in d or not isinstance(d["P"], list):
            raise ConfigError("markov model needs a 'P' matrix")
        return MarkovModel(d["P"])
    if kind == "block_gibbs":
        if "r" not in d or not isinstance(d["r"], int) or isinstance(d["r"], bool):
            raise ConfigError("block_gibbs model needs an integer 'r'")
        if "phi" not in d:
            raise ConfigError("block_gibbs model needs a 'phi' table")
        return BlockGibbsModel(d["r"], _parse_phi(d["phi"], d["r"]))
    if kind == "mixture":
        if "weights" not in d or "components" not in d or not isinstance(d["components"], list):
            raise ConfigError("mixture model needs 'weights' and 'components'")
        return MixtureModel(d["weights"], [model_from_dict(c) for c in d["components"]])
    raise ConfigError(f"unknown model type {kind!r}")


def model_to_dict(model: MeasureModel) -> dict:
    return model.describe()


def model_hash(model: MeasureModel) -> str:
    """Short stable digest of the model definition."""
    payload = json.dumps(model.describe(), sort_keys=True, separators=(",", ":"))
    return hashlib.sha256(payload.encode()).hexdigest()[:16]
