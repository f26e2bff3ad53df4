"""The stock models exercised by the test and demo pipelines.

All are binary-alphabet and fully supported except where noted.  ``MSTAR_P``
is the reference two-state chain used in most worked examples.
"""

from __future__ import annotations

import math

from .models import BernoulliModel, BlockGibbsModel, MarkovModel, MixtureModel

MSTAR_P = [[0.9, 0.1], [0.2, 0.8]]

# A genuinely range-3 potential: the compiled chain's conditionals depend on
# the last two symbols, not one.
RANGE3_PHI = [
    [[0.2, -0.3], [0.1, 0.4]],
    [[-0.1, 0.3], [0.5, -0.2]],
]


def bernoulli_07() -> BernoulliModel:
    return BernoulliModel([0.7, 0.3])


def markov_mstar() -> MarkovModel:
    return MarkovModel(MSTAR_P)


def block_gibbs_log_mstar() -> BlockGibbsModel:
    phi = [[math.log(v) for v in row] for row in MSTAR_P]
    return BlockGibbsModel(2, phi)


def block_gibbs_zero() -> BlockGibbsModel:
    return BlockGibbsModel(2, [[0.0, 0.0], [0.0, 0.0]])


def block_gibbs_range3() -> BlockGibbsModel:
    return BlockGibbsModel(3, RANGE3_PHI)


def mixture_two_bernoullis() -> MixtureModel:
    return MixtureModel(
        [0.5, 0.5],
        [BernoulliModel([0.9, 0.1]), BernoulliModel([0.1, 0.9])],
    )


def all_bundled() -> dict:
    return {
        "bernoulli_07": bernoulli_07(),
        "markov_mstar": markov_mstar(),
        "block_gibbs_log_mstar": block_gibbs_log_mstar(),
        "block_gibbs_zero": block_gibbs_zero(),
        "block_gibbs_range3": block_gibbs_range3(),
        "mixture_two_bernoullis": mixture_two_bernoullis(),
    }


def fully_supported() -> dict:
    out = all_bundled()
    out.pop("mixture_two_bernoullis")
    return out
