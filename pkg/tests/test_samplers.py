import math

import numpy as np
import pytest

from popabc.errors import BudgetExhausted
from popabc.kernel import KernelScale
from popabc.models import IndependentNormalPrior, ModelSpec, UniformBoxPrior
from popabc.samplers import (
    AutoSchedule,
    Population,
    ToleranceSchedule,
    abc_mcmc,
    abc_pmc,
    abc_prc,
    abc_rejection,
    pmc_log_weights,
    prc_log_weights,
    resample_index,
)
from popabc.benchmarks import get_model


def constant_model():
    """Distance is always zero: every simulated proposal is accepted."""
    return ModelSpec(
        name="constant",
        prior=UniformBoxPrior([0.0], [1.0]),
        simulator=lambda theta, rng: np.array([0.0]),
        observed=[0.0],
    )


def weighted_var(pop):
    mean = float(pop.weights @ pop.thetas[:, 0])
    return float(pop.weights @ (pop.thetas[:, 0] - mean) ** 2)


# ---------------------------------------------------------------- schedules


def test_schedule_requires_strict_decrease():
    with pytest.raises(ValueError):
        ToleranceSchedule((1.0, 2.0))
    with pytest.raises(ValueError):
        ToleranceSchedule((1.0, 1.0))
    with pytest.raises(ValueError):
        ToleranceSchedule(())
    with pytest.raises(ValueError):
        ToleranceSchedule((1.0, -0.5))
    assert ToleranceSchedule((3.0, 1.0, 0.0)).n_generations == 3


def test_auto_schedule_validation():
    with pytest.raises(ValueError):
        AutoSchedule(first_epsilon=1.0, quantile=1.5, n_generations=3)
    with pytest.raises(ValueError):
        AutoSchedule(first_epsilon=-1.0, quantile=0.5, n_generations=3)
    with pytest.raises(ValueError):
        AutoSchedule(first_epsilon=1.0, quantile=0.5, n_generations=0)


# ---------------------------------------------------------------- resampling


def test_resample_single_particle():
    rng = np.random.default_rng(0)
    assert resample_index(np.array([1.0]), rng) == 0


def test_resample_excludes_zero_weight():
    rng = np.random.default_rng(1)
    for _ in range(200):
        assert resample_index(np.array([0.0, 1.0]), rng) == 1


def test_resample_frequencies():
    rng = np.random.default_rng(2)
    weights = np.array([0.5, 0.5])
    counts = np.zeros(2)
    for _ in range(100_000):
        counts[resample_index(weights, rng)] += 1
    assert abs(counts[0] / 100_000 - 0.5) < 0.01


def test_resample_rejects_unnormalized():
    with pytest.raises(ValueError):
        resample_index(np.array([0.5, 0.6]), np.random.default_rng(0))


# ---------------------------------------------------------------- weights


def test_pmc_weight_single_ancestor_value():
    # one ancestor at 0 with weight 1, tau2 = 1, offspring at 0, U(-10, 10) prior:
    # 0.05 / phi(0) = 0.05 * sqrt(2 pi)
    prior = UniformBoxPrior([-10.0], [10.0])
    log_w = pmc_log_weights(
        np.array([[0.0]]),
        prior,
        np.array([[0.0]]),
        np.array([1.0]),
        KernelScale(tau2=[1.0]),
    )
    expected = 0.05 * math.sqrt(2 * math.pi)
    assert math.exp(log_w[0]) == pytest.approx(expected, rel=1e-12)
    assert math.exp(log_w[0]) == pytest.approx(0.12533, abs=1e-5)


def test_pmc_weights_match_brute_force():
    rng = np.random.default_rng(4)
    for trial in range(50):
        n = int(rng.integers(3, 40))
        d = int(rng.integers(1, 3))
        prev = rng.normal(0, 2, size=(n, d))
        cur = rng.normal(0, 2, size=(n, d))
        weights = rng.dirichlet(np.ones(n))
        tau2 = rng.uniform(0.1, 4.0, size=d)
        if trial % 2 == 0:
            prior = UniformBoxPrior([-30.0] * d, [30.0] * d)
        else:
            prior = IndependentNormalPrior([0.0] * d, [3.0] * d)
        got = np.exp(pmc_log_weights(cur, prior, prev, weights, KernelScale(tau2=tau2)))
        for i in range(n):
            denom = 0.0
            for j in range(n):
                quad_form = 0.0
                log_norm = 0.0
                for k in range(d):
                    diff = cur[i][k] - prev[j][k]
                    quad_form += diff * diff / tau2[k]
                    log_norm += math.log(2 * math.pi * tau2[k])
                denom += weights[j] * math.exp(-0.5 * (quad_form + log_norm))
            expected = math.exp(prior.logpdf(cur[i])) / denom
            assert abs(got[i] - expected) / expected < 1e-10


def test_prc_weight_normal_prior_ratio():
    # ancestor at 0, offspring at 1, N(0, 1) prior: phi(1)/phi(0) = exp(-1/2)
    prior = IndependentNormalPrior([0.0], [1.0])
    log_w = prc_log_weights(
        np.array([[1.0]]), np.array([0]), prior, np.array([[0.0]])
    )
    assert math.exp(log_w[0]) == pytest.approx(math.exp(-0.5), rel=1e-12)


# ---------------------------------------------------------------- populations


def test_population_invariants_enforced():
    with pytest.raises(ValueError):
        Population(
            t=1, epsilon=0.5,
            thetas=np.array([[0.0], [1.0]]),
            weights=np.array([0.5, 0.5]),
            dists=np.array([0.1, 0.9]),  # exceeds epsilon
            scale=None, sims_used=2,
        )
    with pytest.raises(ValueError):
        Population(
            t=1, epsilon=1.0,
            thetas=np.array([[0.0], [1.0]]),
            weights=np.array([0.7, 0.7]),
            dists=np.array([0.1, 0.2]),
            scale=None, sims_used=2,
        )


def test_population_particles_view():
    pop = abc_rejection(constant_model(), 1.0, 5, seed=0)
    parts = pop.particles()
    assert len(parts) == 5
    assert parts[0].weight == pytest.approx(0.2)


# ---------------------------------------------------------------- rejection


def test_rejection_accept_everything():
    pop = abc_rejection(constant_model(), 10.0, 64, seed=8)
    assert pop.sims_used == 64
    assert np.all(pop.weights == pop.weights[0])


def test_rejection_rejects_empty_request():
    with pytest.raises(ValueError):
        abc_rejection(constant_model(), 1.0, 0, seed=0)


def test_rejection_mixture_variance():
    # analytic posterior variance 0.505; tolerance-smoothing at eps=0.1 is small
    pop = abc_rejection(get_model("mixture-toy"), 0.10, 5000, seed=42)
    assert abs(weighted_var(pop) - 0.505) / 0.505 < 0.10


# ---------------------------------------------------------------- pmc / prc


def test_pmc_single_generation_equals_rejection():
    model = get_model("mixture-toy")
    rej = abc_rejection(model, 2.0, 150, seed=99)
    (pmc_pop,) = abc_pmc(model, (2.0,), 150, seed=99)
    assert np.array_equal(rej.thetas, pmc_pop.thetas)
    assert np.array_equal(rej.weights, pmc_pop.weights)
    assert np.array_equal(rej.dists, pmc_pop.dists)
    assert rej.sims_used == pmc_pop.sims_used


def test_pmc_generations_respect_tolerances():
    pops = abc_pmc(get_model("mixture-toy"), (2.0, 0.8, 0.4), 200, seed=5)
    assert [p.t for p in pops] == [1, 2, 3]
    for pop, eps in zip(pops, (2.0, 0.8, 0.4)):
        assert pop.epsilon == eps
        assert np.all(pop.dists <= eps)
        assert abs(pop.weights.sum() - 1.0) < 1e-9
    assert pops[0].scale is None
    assert pops[1].scale is not None and pops[1].scale.mode == "diagonal"


def test_pmc_posterior_moments_smallish_run():
    pops = abc_pmc(get_model("mixture-toy"), (2.0, 0.5, 0.10), 1000, seed=3)
    var = weighted_var(pops[-1])
    assert 0.38 <= var <= 0.65
    mean = float(pops[-1].weights @ pops[-1].thetas[:, 0])
    assert abs(mean) < 0.12


def test_prc_uniform_prior_weights_exactly_equal():
    pops = abc_prc(get_model("mixture-toy"), (2.0, 0.8, 0.4), 150, seed=17)
    for pop in pops:
        assert np.all(pop.weights == pop.weights[0])


def test_prc_propagation_matches_pmc_before_weighting():
    # same seed, same first two generations of proposals: generation 2 particle
    # positions agree because gen-1 weights are uniform for both samplers
    model = get_model("mixture-toy")
    pmc_pops = abc_pmc(model, (2.0, 0.8), 120, seed=31)
    prc_pops = abc_prc(model, (2.0, 0.8), 120, seed=31)
    assert np.array_equal(pmc_pops[1].thetas, prc_pops[1].thetas)
    assert not np.array_equal(pmc_pops[1].weights, prc_pops[1].weights)


def test_sequential_requires_two_particles():
    with pytest.raises(ValueError):
        abc_pmc(get_model("mixture-toy"), (2.0, 1.0), 1, seed=0)


def test_budget_exhaustion_streams_completed_generations():
    model = get_model("mixture-toy")
    seen = []
    with pytest.raises(BudgetExhausted):
        abc_pmc(model, (5.0, 0.0), 100, seed=1, budget=400, on_generation=seen.append)
    assert len(seen) == 1
    assert seen[0].t == 1


def test_auto_schedule_decreases():
    pops = abc_pmc(
        get_model("mixture-toy"),
        AutoSchedule(first_epsilon=2.0, quantile=0.5, n_generations=4),
        300,
        seed=12,
    )
    eps = [p.epsilon for p in pops]
    assert len(eps) == 4
    assert all(b < a for a, b in zip(eps, eps[1:]))


# ---------------------------------------------------------------- mcmc


def test_mcmc_flat_prior_inside_support_always_accepts():
    # constant simulator keeps distance at zero; tiny proposals stay inside
    model = constant_model()
    result = abc_mcmc(model, 0.5, 500, 1e-4, seed=4, init=np.array([0.5]))
    assert result.n_accepted == 500
    assert result.acceptance_rate == 1.0


def test_mcmc_out_of_support_proposals_rejected():
    model = constant_model()
    result = abc_mcmc(model, 0.5, 2000, 10.0, seed=5, init=np.array([0.5]))
    # huge proposals frequently leave [0, 1]; those moves must be rejected
    assert result.n_accepted < 2000
    assert np.all((result.thetas >= 0.0) & (result.thetas <= 1.0))


def test_mcmc_rejected_step_repeats_state():
    model = constant_model()
    result = abc_mcmc(model, 0.5, 400, 10.0, seed=6, init=np.array([0.5]))
    changed = np.count_nonzero(np.diff(result.thetas[:, 0]))
    assert changed == result.n_accepted or changed == result.n_accepted - 1


def test_mcmc_init_must_satisfy_tolerance():
    model = ModelSpec(
        name="far",
        prior=UniformBoxPrior([0.0], [1.0]),
        simulator=lambda theta, rng: np.array([100.0]),
        observed=[0.0],
    )
    with pytest.raises(ValueError, match="tolerance"):
        abc_mcmc(model, 0.5, 10, 0.1, seed=0, init=np.array([0.5]))


def test_mcmc_finds_init_and_counts_sims():
    model = get_model("mixture-toy")
    result = abc_mcmc(model, 0.5, 2000, 1.0, seed=9)
    assert result.init_sims >= 1
    assert result.sims_used >= result.init_sims
    assert np.all(result.dists <= 0.5)


def test_mcmc_mixture_variance_sanity():
    result = abc_mcmc(get_model("mixture-toy"), 0.10, 60_000, 1.5, seed=1)
    var = float(np.var(result.thetas[5000:, 0]))
    assert 0.38 <= var <= 0.64


def test_mcmc_budget_enforced():
    with pytest.raises(BudgetExhausted):
        abc_mcmc(get_model("mixture-toy"), 0.5, 100_000, 1.0, seed=2, budget=500)
