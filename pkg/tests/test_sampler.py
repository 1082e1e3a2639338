import math

import numpy as np
import pytest
from scipy.stats import chi2

from topchoice import (
    ComparisonDesign,
    DesignError,
    NoiseModel,
    ParamVector,
    ValidationError,
    choice_prob,
    sample_choice,
    sample_dataset,
    sample_two_class_theta,
    substream,
)
from topchoice.sampler import sample_noise


def test_param_vector_invariants():
    ParamVector(np.array([0.5, -0.5]), 1.0)
    with pytest.raises(ValidationError):
        ParamVector(np.array([0.5, 0.5]), 1.0)  # not zero-sum
    with pytest.raises(ValidationError):
        ParamVector(np.array([2.0, -2.0]), 1.0)  # outside box
    with pytest.raises(ValidationError):
        ParamVector(np.array([0.0]), 0.0)  # bad radius


def test_design_validation():
    with pytest.raises(DesignError):
        ComparisonDesign.uniform(3, 4)  # k > n
    with pytest.raises(DesignError):
        ComparisonDesign.explicit(3, [(0, 0)])
    design = ComparisonDesign.round_robin(4, 2)
    assert design.implied_m() == 12


def test_round_robin_dataset():
    design = ComparisonDesign.round_robin(4, 2)
    ds = sample_dataset(
        NoiseModel.gumbel(1.0), ParamVector.zeros(4, 1.0), design, seed=0
    )
    assert ds.m == 12
    pairs = [tuple(sorted(s)) for s in ds.sets]
    for pair in ((0, 1), (0, 2), (0, 3), (1, 2), (1, 3), (2, 3)):
        assert pairs.count(pair) == 2


def test_explicit_design_reproduced_verbatim():
    sets = [(0, 1), (1, 2, 3), (0, 3), (2, 3), (0, 1, 2, 3)]
    design = ComparisonDesign.explicit(4, sets)
    ds = sample_dataset(
        NoiseModel.laplace(1.0), ParamVector.zeros(4, 1.0), design, seed=3
    )
    assert [tuple(s) for s in ds.sets] == sets


def test_seed_determinism():
    model = NoiseModel.gaussian(1.0)
    theta = ParamVector.zeros(10, 1.0)
    design = ComparisonDesign.uniform(10, 3)
    a = sample_dataset(model, theta, design, 100, seed=5)
    b = sample_dataset(model, theta, design, 100, seed=5)
    assert a.sets == b.sets
    assert np.array_equal(a.winners, b.winners)
    c = sample_dataset(model, theta, design, 100, seed=6)
    assert a.sets != c.sets or not np.array_equal(a.winners, c.winners)


def test_substreams_are_independent():
    a = substream(1, 0).random(5)
    b = substream(1, 1).random(5)
    assert not np.allclose(a, b)
    assert np.allclose(a, substream(1, 0).random(5))


def test_symmetric_winner_frequencies():
    model = NoiseModel.uniform(1.0)
    ds = sample_dataset(
        model, ParamVector.zeros(4, 1.0),
        ComparisonDesign.explicit(4, [(0, 1, 2, 3)] * 20000), seed=9,
    )
    freqs = np.bincount(ds.winners, minlength=4) / ds.m
    sigma = math.sqrt(0.25 * 0.75 / ds.m)
    assert np.all(np.abs(freqs - 0.25) < 3.5 * sigma)


def test_pair_frequency_matches_softmax():
    model = NoiseModel.gumbel(1.0)
    theta = ParamVector(np.array([math.log(3) / 2, -math.log(3) / 2]), 1.0)
    ds = sample_dataset(
        model, theta, ComparisonDesign.explicit(2, [(0, 1)] * 100_000), seed=11
    )
    freq = float(np.mean(ds.winners == 0))
    sigma = math.sqrt(0.75 * 0.25 / ds.m)
    assert abs(freq - 0.75) < 4 * sigma


def test_disjoint_support_certain_winner():
    model = NoiseModel.uniform(1.0)
    theta = ParamVector(np.array([1.25, -1.25]), 2.0)
    ds = sample_dataset(
        model, theta, ComparisonDesign.explicit(2, [(0, 1)] * 2000), seed=2
    )
    assert np.all(ds.winners == 0)


@pytest.mark.parametrize(
    "model",
    [
        NoiseModel.gaussian(1.0),
        NoiseModel.gumbel(1.0),
        NoiseModel.laplace(1.0),
        NoiseModel.uniform(1.0),
    ],
    ids=lambda m: m.kind,
)
def test_sampled_noise_moments(model):
    rng = substream(123)
    x = sample_noise(model, rng, 200_000)
    assert abs(float(x.mean())) < 4 * model.std() / math.sqrt(x.size)
    assert float(x.var()) == pytest.approx(model.variance(), rel=0.03)


def test_empirical_winner_distribution_matches_choice_prob():
    # 20 random (model, theta, set) triples, 1e5 draws each; empirical
    # winner frequency within 4 binomial sigmas of the choice probability
    rng = np.random.default_rng(77)
    models = [
        NoiseModel.gaussian(1.0),
        NoiseModel.gumbel(1.0),
        NoiseModel.laplace(1.0),
        NoiseModel.uniform(1.0),
    ]
    draws = 100_000
    for trial in range(20):
        model = models[trial % 4]
        k = int(rng.choice([2, 3, 5]))
        theta = rng.uniform(-1, 1, k)
        theta -= theta.mean()
        ds = sample_dataset(
            model, ParamVector(theta, 2.0),
            ComparisonDesign.explicit(k, [tuple(range(k))] * draws),
            seed=1000 + trial,
        )
        for i in range(k):
            p = choice_prob(model, theta[i] - np.delete(theta, i))
            freq = float(np.mean(ds.winners == i))
            sigma = math.sqrt(max(p * (1 - p), 1e-12) / draws)
            assert abs(freq - p) <= 4 * sigma + 1e-9, (trial, i, freq, p)


def test_uniform_subsets_equidistributed():
    # chi-square over all 10 pairs from n=5, 1e5 draws
    ds = sample_dataset(
        NoiseModel.gumbel(1.0), ParamVector.zeros(5, 1.0),
        ComparisonDesign.uniform(5, 2), 100_000, seed=31,
    )
    counts = {}
    for s in ds.sets:
        counts[s] = counts.get(s, 0) + 1
    assert len(counts) == 10
    expected = ds.m / 10
    stat = sum((c - expected) ** 2 / expected for c in counts.values())
    assert stat < chi2.ppf(0.999, df=9)


def test_sample_choice_ties_resolve_to_lowest_index():
    # zero-width noise is impossible; emulate a tie via identical strengths
    # and a model draw forced equal by the argmax-first rule on exact ties
    model = NoiseModel.uniform(1.0)
    theta = ParamVector(np.array([3.0, -1.5, -1.5]), 4.0)
    winner = sample_choice(model, theta, (0, 1, 2), substream(0))
    assert winner == 0  # strength gap 4.5 > 2a guarantees item 0


def test_two_class_theta():
    tc2 = sample_two_class_theta(4, 1.0, seed_or_rng=3)
    vals = sorted(tc2.theta.theta)
    assert vals == [-1.0, -1.0, 1.0, 1.0]
    assert abs(tc2.theta.theta.sum()) < 1e-12
    assert len(tc2.high_class) == 2
    assert all(tc2.theta.theta[i] == 1.0 for i in tc2.high_class)
    with pytest.raises(ValidationError):
        sample_two_class_theta(5, 1.0)


def test_two_class_theta_n6():
    tc6 = sample_two_class_theta(6, 2.0, seed_or_rng=0)
    assert sorted(tc6.theta.theta) == [-2.0] * 3 + [2.0] * 3
