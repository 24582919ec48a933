"""Genetic engine: operators, statistics, and end-to-end recovery."""

import numpy as np
import pytest
from scipy import stats

from su2tomo import genetic, su2
from su2tomo import polarimetry as pol


def measurement_for(q):
    return pol.MeasurementSet.from_array(pol.six_intensities_from_quats(q))


def test_repair_theta_fold_is_gauge_lossless():
    rng = np.random.default_rng(30)
    axis = rng.normal(size=(50, 3))
    axis /= np.linalg.norm(axis, axis=1)[:, None]
    theta = rng.uniform(-3 * np.pi, 3 * np.pi, size=50)
    genes = np.concatenate([theta[:, None], axis], axis=1)
    fixed, degenerate = genetic.repair_genes(genes)
    assert not degenerate.any()
    assert np.all((fixed[:, 0] >= 0.0) & (fixed[:, 0] <= np.pi))
    # Folding theta by pi flips the quaternion sign at most: same gate.
    q_raw = np.concatenate(
        [np.cos(theta)[:, None], np.sin(theta)[:, None] * axis], axis=1
    )
    q_fix = genetic.genes_to_quats(fixed)
    fids = np.sum(q_raw * q_fix, axis=1) ** 2
    assert np.all(fids > 1.0 - 1e-12)


def test_repair_normalizes_axis_and_rescues_zero():
    genes = np.array(
        [
            [0.5, 0.0, 0.0, 2.0],
            [0.7, 3.0, 4.0, 0.0],
            [1.0, 0.0, 0.0, 0.0],
        ]
    )
    fixed, degenerate = genetic.repair_genes(genes)
    assert np.allclose(fixed[0, 1:], [0.0, 0.0, 1.0])
    assert np.allclose(fixed[1, 1:], [0.6, 0.8, 0.0])
    assert np.array_equal(fixed[2, 1:], [0.0, 0.0, 1.0])
    assert list(degenerate) == [False, False, True]
    ind = genetic.repair(genetic.Individual([1.0, 0.0, 0.0, 0.0]))
    assert ind.degenerate_repair
    assert ind.fitness is None


def test_random_population_ranges_and_isotropy():
    rng = np.random.default_rng(31)
    genes = genetic.random_population_genes(rng, 20000)
    assert genes.shape == (20000, 4)
    assert genes[:, 0].min() >= 0.0 and genes[:, 0].max() <= np.pi
    assert np.allclose(np.linalg.norm(genes[:, 1:], axis=1), 1.0)
    assert genes[:, 0].mean() == pytest.approx(np.pi / 2, abs=0.02)
    assert np.abs(genes[:, 1:].mean(axis=0)).max() < 0.02


def test_mse_cost_matches_direct_expansion():
    rng = np.random.default_rng(32)
    q_true = su2.sample_haar_quats(rng, 1)[0]
    m = measurement_for(q_true)
    genes = genetic.random_population_genes(rng, 10)
    for row in genes:
        ind = genetic.Individual(row)
        gate = su2.GateParams(row[0], row[1:])
        expect = float(
            np.sum(
                (pol.six_intensities_exact(gate).as_array() - m.as_array())
                ** 2
            )
        )
        assert genetic.mse_cost(ind, m) == pytest.approx(expect, abs=1e-12)


def test_tournament_selection_pressure():
    n, k, trials = 40, 3, 10000
    inds = [
        genetic.Individual([0.5, 0.0, 0.0, 1.0], fitness=float(i))
        for i in range(n)
    ]
    pop = genetic.Population(inds)
    rng = np.random.default_rng(33)
    hits = sum(
        genetic.tournament_select(pop, k, rng) is inds[0]
        for _ in range(trials)
    )
    # Drawing k of n without replacement picks the best with rate k/n.
    p = k / n
    sigma = np.sqrt(p * (1 - p) / trials)
    assert abs(hits / trials - p) < 4 * sigma
    with pytest.raises(ValueError):
        genetic.tournament_select(pop, 0, rng)
    with pytest.raises(ValueError):
        genetic.tournament_select(pop, n + 1, rng)


def test_blend_crossover_bounds_and_uniformity():
    rng = np.random.default_rng(34)
    pa = np.tile([0.2, 1.0, 0.0, 0.0], (4000, 1))
    pb = np.tile([1.0, 0.0, 1.0, 0.0], (4000, 1))
    alpha = 0.5
    c1, c2 = genetic.blend_crossover_genes(pa, pb, alpha, rng)
    kids = np.concatenate([c1, c2])
    lo = np.minimum(pa[0], pb[0])
    hi = np.maximum(pa[0], pb[0])
    span = hi - lo
    low = lo - alpha * span
    high = hi + alpha * span
    assert np.all(kids >= low) and np.all(kids <= high)
    # Identical parent genes (index 3) stay identical.
    assert np.all(kids[:, 3] == 0.0)
    # Per-gene values are uniform over the extended span.
    for g in range(3):
        res = stats.kstest(
            kids[:, g], stats.uniform(low[g], high[g] - low[g]).cdf
        )
        assert res.pvalue > 1e-3


def test_gaussian_mutation_statistics():
    rng = np.random.default_rng(35)
    base = np.zeros((8000, 4))
    mutated = genetic.mutate_genes(base.copy(), 1.0, 0.0, 0.2, rng)
    assert mutated.mean() == pytest.approx(0.0, abs=0.01)
    assert mutated.std() == pytest.approx(0.2, abs=0.01)
    untouched = genetic.mutate_genes(base.copy(), 0.0, 0.0, 0.2, rng)
    assert np.array_equal(untouched, base)
    partial = genetic.mutate_genes(base.copy(), 0.3, 0.0, 0.2, rng)
    frac = np.mean(partial != 0.0)
    assert frac == pytest.approx(0.3, abs=0.02)
    ind = genetic.Individual([0.5, 1.0, 0.0, 0.0])
    out = genetic.gaussian_mutation(ind, 1.0, 0.0, 0.2, rng)
    assert np.allclose(np.linalg.norm(out.genes[1:]), 1.0)


def test_run_ga_trace_monotone_and_counts():
    rng = np.random.default_rng(36)
    q = su2.sample_haar_quats(rng, 1)[0]
    cfg = genetic.GaConfig(generations=30, seed=9)
    res = genetic.run_ga(measurement_for(q), cfg)
    trace = res.diagnostics["best_cost_per_generation"]
    assert len(trace) == cfg.generations + 1
    assert all(b <= a for a, b in zip(trace, trace[1:]))
    assert trace[-1] == res.cost
    assert res.diagnostics["evaluations"] == cfg.population * (
        cfg.generations + 1
    )
    assert res.engine == "ga"
    assert res.elapsed > 0.0


def test_run_ga_recovers_noiseless_gates():
    rng = np.random.default_rng(37)
    for i, q in enumerate(su2.sample_haar_quats(rng, 5)):
        res = genetic.run_ga(
            measurement_for(q), genetic.GaConfig(seed=100 + i)
        )
        fid = su2.quat_fidelity(q, su2.params_to_quat(res.params))
        assert fid > 0.995, f"gate {i}: fidelity {fid}"


def test_run_ga_seed_determinism():
    q = su2.sample_haar_quats(np.random.default_rng(38), 1)[0]
    m = measurement_for(q)
    cfg = genetic.GaConfig(generations=20, seed=5)
    a = genetic.run_ga(m, cfg)
    b = genetic.run_ga(m, cfg)
    assert np.array_equal(
        a.diagnostics["best_genes"], b.diagnostics["best_genes"]
    )
    assert a.cost == b.cost
    # An explicit rng overrides the config seed path identically.
    c = genetic.run_ga(m, cfg, rng=np.random.default_rng(5))
    assert np.array_equal(
        a.diagnostics["best_genes"], c.diagnostics["best_genes"]
    )


def test_run_ga_more_generations_help():
    rng = np.random.default_rng(39)
    quats = su2.sample_haar_quats(rng, 12)
    short, long = [], []
    for i, q in enumerate(quats):
        m = measurement_for(q)
        res = genetic.run_ga(
            m, genetic.GaConfig(generations=60, seed=200 + i)
        )
        trace = res.diagnostics["best_cost_per_generation"]
        short.append(trace[10])
        long.append(trace[60])
        # Same seed, fewer generations: an identical prefix of the search.
        res10 = genetic.run_ga(
            m, genetic.GaConfig(generations=10, seed=200 + i)
        )
        assert res10.cost == trace[10]
    assert np.median(long) < np.median(short)


def test_run_ga_initial_population_paths():
    q = su2.sample_haar_quats(np.random.default_rng(40), 1)[0]
    m = measurement_for(q)
    params = su2.quat_to_params(q)
    rng = np.random.default_rng(41)
    n = 40
    seeds = np.tile(
        np.concatenate([[params.theta], params.n]), (n, 1)
    ) + rng.uniform(-0.05, 0.05, size=(n, 4))
    cfg = genetic.GaConfig(generations=10, seed=3)
    res = genetic.run_ga(m, cfg, initial=seeds)
    assert su2.quat_fidelity(q, su2.params_to_quat(res.params)) > 0.9999
    # A Population object works the same way.
    pop = genetic.Population([genetic.Individual(row) for row in seeds])
    res2 = genetic.run_ga(m, cfg, initial=pop)
    assert res2.cost == res.cost
    with pytest.raises(ValueError):
        genetic.run_ga(m, cfg, initial=seeds[:5])


def test_ga_config_validation():
    with pytest.raises(ValueError):
        genetic.GaConfig(population=1)
    with pytest.raises(ValueError):
        genetic.GaConfig(generations=0)
    with pytest.raises(ValueError):
        genetic.GaConfig(tournament_k=41)
    with pytest.raises(ValueError):
        genetic.GaConfig(crossover_prob=1.5)
    with pytest.raises(ValueError):
        genetic.GaConfig(mutation_sigma=-0.1)
