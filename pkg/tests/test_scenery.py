import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from shift_scenery.errors import ShiftSceneryError, UnsupportedModelError, ZeroMeasurePrefixError
from shift_scenery.models import BernoulliModel, MarkovModel
from shift_scenery.sampling import sample_future
from shift_scenery.scenery import (
    CylinderVector,
    EmpiricalDistribution,
    GeneratingSet,
    blowup_distribution,
    distribution_distance,
    evaluate_generating_set,
    ground_metric,
    minimeasure,
    scenery_checkpoints,
    scenery_distribution,
)


def _dirac(vec, k=2, depth=None):
    vec = np.asarray(vec, dtype=float)
    depth = depth or round(math.log(len(vec), k))
    return EmpiricalDistribution(k, depth, vec[None, :], np.array([1.0]))


# ---------------------------------------------------------------------------
# cylinder vectors


def test_cylinder_vector_values_and_marginals():
    v = CylinderVector(2, 2, [0.1, 0.2, 0.3, 0.4])
    assert v.value(()) == 1.0
    assert abs(v.value((0,)) - 0.3) < 1e-15
    assert abs(v.value((1, 0)) - 0.3) < 1e-15
    assert np.abs(v.marginal(1) - [0.3, 0.7]).max() < 1e-15
    with pytest.raises(ValueError):
        v.value((0, 1, 1))


def test_cylinder_vector_invariants():
    with pytest.raises(ValueError):
        CylinderVector(2, 1, [0.6, 0.5])
    with pytest.raises(ValueError):
        CylinderVector(2, 1, [1.2, -0.2])


# ---------------------------------------------------------------------------
# minimeasures


def test_minimeasure_bernoulli_is_the_measure(bern07):
    for prefix in [(), (0,), (1, 0, 1)]:
        v = minimeasure(bern07, prefix, 3)
        assert np.abs(v.probs - bern07.distribution_vector(3)).max() < 1e-14


def test_minimeasure_markov_row(mstar):
    assert np.abs(minimeasure(mstar, (1, 0), 1).probs - [0.9, 0.1]).max() < 1e-14
    assert abs(minimeasure(mstar, (0,), 2).value((1, 1)) - 0.08) < 1e-14


def test_minimeasure_zero_prefix_rejected():
    gm = MarkovModel([[0.5, 0.5], [1.0, 0.0]])
    with pytest.raises(ZeroMeasurePrefixError):
        minimeasure(gm, (1, 1), 2)


def test_minimeasure_mixture_interpolates(mixture):
    # posterior tilts toward the component that explains the prefix
    v = minimeasure(mixture, (0,) * 20, 1)
    assert abs(v.probs[0] - 0.9) < 1e-6


def test_minimeasure_normalization_residual(bundle):
    for model in bundle.values():
        traj = sample_future(model, 50, 3)
        v = minimeasure(model, traj.future, 3)
        assert abs(v.probs.sum() - 1.0) < 1e-12


# ---------------------------------------------------------------------------
# scenery distributions


def test_bernoulli_scenery_single_atom(bern07):
    traj = sample_future(bern07, 2000, 1)
    sc = scenery_distribution(bern07, traj, 2000, 3)
    assert len(sc) == 1
    assert np.abs(sc.vectors[0] - bern07.distribution_vector(3)).max() < 1e-12
    assert distribution_distance(sc, blowup_distribution(bern07, 3)) < 1e-9


def test_markov_scenery_atoms(mstar):
    N = 2000
    traj = sample_future(mstar, N, 2)
    sc = scenery_distribution(mstar, traj, N, 1)
    assert len(sc) == 3  # two transition rows plus the weight-1/N base atom
    rows = {tuple(np.round(v, 12)) for v in sc.vectors}
    assert (0.9, 0.1) in rows and (0.2, 0.8) in rows
    base = [w for v, w in zip(sc.vectors, sc.weights) if abs(v[0] - 2 / 3) < 1e-9]
    assert base == [1.0 / N]


def test_scenery_single_step_is_base_measure(mstar):
    traj = sample_future(mstar, 1, 2)
    sc = scenery_distribution(mstar, traj, 1, 2)
    assert len(sc) == 1
    assert np.abs(sc.vectors[0] - mstar.distribution_vector(2)).max() < 1e-14


def test_scenery_checkpoints_consistent(mstar):
    traj = sample_future(mstar, 3000, 9)
    sc_all = scenery_checkpoints(mstar, traj, [100, 1000, 3000], 2)
    for n, sc in zip([100, 1000, 3000], sc_all):
        direct = scenery_distribution(mstar, traj, n, 2)
        assert distribution_distance(sc, direct) < 1e-12
    with pytest.raises(ValueError):
        scenery_checkpoints(mstar, traj, [1000, 100], 2)


def test_scenery_rejects_short_trajectory(mstar):
    traj = sample_future(mstar, 10, 1)
    with pytest.raises(ValueError):
        scenery_distribution(mstar, traj, 11, 1)


def test_scenery_off_support_trajectory():
    gm = MarkovModel([[0.5, 0.5], [1.0, 0.0]])
    bad = sample_future(gm, 5, 1)
    bad = type(bad)(future=(1, 1, 0, 0, 1), seed=1, model_id=bad.model_id)
    with pytest.raises(ZeroMeasurePrefixError):
        scenery_distribution(gm, bad, 5, 2)


def test_mixture_of_unequal_ranges():
    # components with different conditioning lengths share one engine
    from shift_scenery.models import MixtureModel

    mix = MixtureModel(
        [0.5, 0.5],
        [BernoulliModel([0.8, 0.2]), MarkovModel([[0.1, 0.9], [0.8, 0.2]])],
    )
    traj = sample_future(mix, 3000, 21)
    sc = scenery_distribution(mix, traj, 3000, 2)
    assert abs(sc.weights.sum() - 1.0) < 1e-10
    refs = [blowup_distribution(c, 2) for c in mix.components]
    dists = [distribution_distance(sc, r) for r in refs]
    assert dists[traj.component] < 0.05
    # spot-check one atom against the direct prefix conditional
    v = minimeasure(mix, traj.future[:17], 2)
    direct = [
        mix.cylinder_measure(traj.future[:17] + e) / mix.cylinder_measure(traj.future[:17])
        for e in mix.alphabet.all_words(2)
    ]
    assert np.abs(v.probs - direct).max() < 1e-12


def test_mixture_scenery_converges_to_component(mixture):
    traj = sample_future(mixture, 5000, 4)
    sc = scenery_distribution(mixture, traj, 5000, 3)
    refs = [blowup_distribution(c, 3) for c in mixture.components]
    dists = [distribution_distance(sc, r) for r in refs]
    assert dists[traj.component] < 0.02
    assert dists[1 - traj.component] > 0.1
    assert abs(sc.weights.sum() - 1.0) < 1e-10


# ---------------------------------------------------------------------------
# generating sets


def test_generating_set_examples():
    half = BernoulliModel([0.5, 0.5])
    d = _dirac(half.distribution_vector(2))
    assert evaluate_generating_set(d, GeneratingSet((0,), 0.4, 0.6)) == 1.0
    assert evaluate_generating_set(d, GeneratingSet((0,), 0.6, 0.9)) == 0.0
    # boundary atoms are excluded: the interval is open
    assert evaluate_generating_set(d, GeneratingSet((0,), 0.5, 0.9)) == 0.0
    assert evaluate_generating_set(d, GeneratingSet((0,), 0.1, 0.5)) == 0.0


def test_generating_set_validates():
    with pytest.raises(ValueError):
        GeneratingSet((0,), 0.5, 0.5)


def test_generating_set_word_depth_guard(mstar):
    d = blowup_distribution(mstar, 1)
    with pytest.raises(ValueError):
        d.evaluate(GeneratingSet((0, 1), 0.0, 1.0))


@settings(max_examples=50, deadline=None)
@given(
    st.floats(0.0, 1.0),
    st.floats(0.001, 0.5),
    st.floats(0.0, 0.4),
)
def test_generating_set_monotone_in_interval(a, width, widen):
    model = MarkovModel([[0.9, 0.1], [0.2, 0.8]])
    d = blowup_distribution(model, 2)
    inner = GeneratingSet((0,), a, a + width)
    outer = GeneratingSet((0,), a - widen, a + width + widen)
    assert d.evaluate(inner) <= d.evaluate(outer) + 1e-15


# ---------------------------------------------------------------------------
# blow-up distributions


def test_blowups_bernoulli_is_dirac(bern07):
    d = blowup_distribution(bern07, 3)
    assert len(d) == 1
    assert np.abs(d.vectors[0] - bern07.distribution_vector(3)).max() < 1e-14


def test_blowups_markov_rows(mstar):
    d = blowup_distribution(mstar, 1)
    got = {tuple(np.round(v, 12)): w for v, w in zip(d.vectors, d.weights)}
    assert abs(got[(0.9, 0.1)] - 2 / 3) < 1e-12
    assert abs(got[(0.2, 0.8)] - 1 / 3) < 1e-12


def test_blowups_compiled_matches_chain(mstar, bg_log_mstar):
    assert distribution_distance(blowup_distribution(bg_log_mstar, 3), blowup_distribution(mstar, 3)) < 1e-10


def test_blowups_reject_mixture(mixture):
    with pytest.raises(UnsupportedModelError):
        blowup_distribution(mixture, 2)


# ---------------------------------------------------------------------------
# transport distance


def test_distance_identity(mstar):
    d = blowup_distribution(mstar, 3)
    assert distribution_distance(d, d) < 1e-12


def test_distance_two_diracs_is_ground_metric(mstar, bern07):
    v1 = CylinderVector(2, 3, mstar.distribution_vector(3))
    v2 = CylinderVector(2, 3, bern07.distribution_vector(3))
    d1, d2 = _dirac(v1.probs), _dirac(v2.probs)
    assert abs(distribution_distance(d1, d2) - ground_metric(v1, v2)) < 1e-12


def test_distance_half_split_hand_solved():
    # one route carries half the mass: W1 = rho / 2
    u = np.array([1.0, 0.0])
    v = np.array([0.0, 1.0])
    d1 = EmpiricalDistribution(2, 1, np.stack([u, v]), np.array([0.5, 0.5]))
    d2 = EmpiricalDistribution(2, 1, np.stack([u, v]), np.array([1.0 - 1e-12, 1e-12]))
    rho = ground_metric(CylinderVector(2, 1, u), CylinderVector(2, 1, v))
    assert abs(distribution_distance(d1, d2) - 0.5 * rho) < 1e-9


def _transport_2x2_oracle(w1, w2, cost):
    # one free variable; the optimum sits at an endpoint
    a, b = w1[0], w2[0]
    lo, hi = max(0.0, a + b - 1.0), min(a, b)
    slope = cost[0, 0] - cost[0, 1] - cost[1, 0] + cost[1, 1]
    base = lambda t: (
        t * cost[0, 0]
        + (a - t) * cost[0, 1]
        + (b - t) * cost[1, 0]
        + (1 - a - b + t) * cost[1, 1]
    )
    return min(base(lo), base(hi)) if slope != 0 else base(lo)


@settings(max_examples=40, deadline=None)
@given(
    st.floats(0.05, 0.95),
    st.floats(0.05, 0.95),
    st.lists(st.floats(0.0, 1.0), min_size=8, max_size=8),
)
def test_distance_matches_2x2_oracle(a, b, raw):
    vecs1 = np.array([[raw[0], 1 - raw[0]], [raw[1], 1 - raw[1]]])
    vecs2 = np.array([[raw[2], 1 - raw[2]], [raw[3], 1 - raw[3]]])
    d1 = EmpiricalDistribution(2, 1, vecs1, np.array([a, 1 - a]))
    d2 = EmpiricalDistribution(2, 1, vecs2, np.array([b, 1 - b]))
    cost = np.array(
        [
            [
                ground_metric(CylinderVector(2, 1, u), CylinderVector(2, 1, v))
                for v in vecs2
            ]
            for u in vecs1
        ]
    )
    got = distribution_distance(d1, d2, merge_radius=0.0)
    assert abs(got - _transport_2x2_oracle([a, 1 - a], [b, 1 - b], cost)) < 1e-8


@settings(max_examples=25, deadline=None)
@given(st.lists(st.floats(0.01, 0.99), min_size=9, max_size=9))
def test_distance_metric_axioms(raw):
    def make(ps, ws):
        vecs = np.array([[p, 1 - p] for p in ps])
        ws = np.asarray(ws)
        return EmpiricalDistribution(2, 1, vecs, ws / ws.sum())

    a = make(raw[0:2], [0.5, 0.5])
    b = make(raw[2:4], [0.3, 0.7])
    c = make(raw[4:6], [0.8, 0.2])
    dab = distribution_distance(a, b)
    dba = distribution_distance(b, a)
    dac = distribution_distance(a, c)
    dbc = distribution_distance(b, c)
    assert abs(dab - dba) < 1e-9
    assert dac <= dab + dbc + 1e-9
    assert dab >= -1e-12


def test_distance_depth_mismatch(mstar):
    with pytest.raises(ValueError):
        distribution_distance(blowup_distribution(mstar, 1), blowup_distribution(mstar, 2))


def test_distance_atom_cap():
    n = 300
    ps = np.linspace(0.01, 0.99, n)
    vecs = np.stack([ps, 1 - ps], axis=1)
    big = EmpiricalDistribution(2, 1, vecs, np.full(n, 1.0 / n))
    small = _dirac([0.5, 0.5])
    with pytest.raises(ShiftSceneryError):
        distribution_distance(big, small)


def test_distance_merges_near_duplicates():
    base = np.array([0.4, 0.6])
    wiggle = base + np.array([1e-12, -1e-12])
    d1 = EmpiricalDistribution(2, 1, np.stack([base, wiggle]), np.array([0.5, 0.5]))
    d2 = _dirac(base)
    assert distribution_distance(d1, d2) < 1e-10
