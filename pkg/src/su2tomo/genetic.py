"""Real-coded genetic reconstruction of axis-angle gate parameters.

An individual is the gene vector (theta, nx, ny, nz). Each generation runs
tournament selection into a mating pool, blend crossover on consecutive
pairs, Gaussian mutation, and elitism (the previous best replaces the worst
offspring); a repair step after every operation keeps individuals physical
by reducing theta modulo pi and normalizing the axis. Fitness is the sum of
squared deviations between predicted and measured intensities.

The module-level operations work on single Individuals to keep the contracts
testable; run_ga uses equivalent vectorized kernels over (N, 4) gene arrays.
"""

import time
from dataclasses import dataclass, field

import numpy as np

from . import su2
from .classic import ReconstructionResult
from .polarimetry import six_intensities_from_quats


@dataclass
class Individual:
    """Gene vector (theta, nx, ny, nz) with cached fitness."""

    genes: np.ndarray
    fitness: float | None = None
    degenerate_repair: bool = False

    def __post_init__(self):
        self.genes = np.asarray(self.genes, dtype=float).reshape(4).copy()


@dataclass
class GaConfig:
    """Hyper-parameters of the genetic engine."""

    population: int = 40
    generations: int = 60
    tournament_k: int = 3
    crossover_prob: float = 0.8
    blend_alpha: float = 0.5
    mutation_prob: float = 0.1
    mutation_mu: float = 0.0
    mutation_sigma: float = 0.2
    elitism: bool = True
    seed: int | None = None

    def __post_init__(self):
        if self.population < 2:
            raise ValueError("population must be >= 2")
        if self.generations < 1:
            raise ValueError("generations must be >= 1")
        if not 1 <= self.tournament_k <= self.population:
            raise ValueError("tournament_k must be in [1, population]")
        for name in ("crossover_prob", "mutation_prob"):
            v = getattr(self, name)
            if not 0.0 <= v <= 1.0:
                raise ValueError(f"{name} must be in [0, 1]")
        if self.blend_alpha < 0 or self.mutation_sigma < 0:
            raise ValueError("blend_alpha and mutation_sigma must be >= 0")


@dataclass
class Population:
    """A fixed-size population with its generation counter and best member."""

    individuals: list
    generation: int = 0
    best: Individual | None = None


def repair_genes(genes):
    """Vectorized constraint repair on an (N, 4) gene array.

    theta is reduced modulo pi (a gauge-equivalent gate), the axis is
    normalized, and a zero axis falls back to (0, 0, 1). Returns the
    repaired array and the mask of rows that needed the fallback.
    """
    genes = np.array(genes, dtype=float)
    genes[:, 0] = np.mod(genes[:, 0], np.pi)
    norms = np.linalg.norm(genes[:, 1:], axis=1)
    degenerate = norms < 1e-12
    safe = np.where(degenerate, 1.0, norms)
    genes[:, 1:] /= safe[:, None]
    genes[degenerate, 1:] = (0.0, 0.0, 1.0)
    return genes, degenerate


def genes_to_quats(genes):
    """Quaternions (N, 4) of repaired gene rows."""
    theta = genes[:, 0]
    s = np.sin(theta)
    return np.concatenate(
        [np.cos(theta)[:, None], s[:, None] * genes[:, 1:]], axis=1
    )


def mse_cost_genes(genes, target):
    """Sum of squared intensity deviations for each gene row."""
    pred = six_intensities_from_quats(genes_to_quats(genes))
    return np.sum((pred - target) ** 2, axis=1)


def repair(ind):
    """Constraint repair of a single Individual; resets cached fitness."""
    genes, degenerate = repair_genes(ind.genes[None, :])
    return Individual(genes[0], fitness=None, degenerate_repair=bool(degenerate[0]))


def mse_cost(ind, m):
    """Sum of squared deviations between the individual's and measured six."""
    return float(mse_cost_genes(ind.genes[None, :], m.as_array())[0])


def tournament_select(pop, k, rng):
    """Fittest of k distinct uniformly drawn members (one tournament)."""
    inds = pop.individuals
    if not 1 <= k <= len(inds):
        raise ValueError("k must be in [1, population size]")
    picks = rng.choice(len(inds), size=k, replace=False)
    best = min(picks, key=lambda i: inds[i].fitness)
    return inds[best]


def blend_crossover(a, b, alpha, rng):
    """Two offspring with genes uniform in the alpha-extended parent span.

    Per gene, with lo = min(a, b) and hi = max(a, b), offspring values are
    drawn uniformly from [lo - alpha (hi - lo), hi + alpha (hi - lo)];
    offspring are repaired before being returned.
    """
    c1, c2 = blend_crossover_genes(
        a.genes[None, :], b.genes[None, :], alpha, rng
    )
    return repair(Individual(c1[0])), repair(Individual(c2[0]))


def blend_crossover_genes(pa, pb, alpha, rng):
    """Vectorized blend crossover on paired (M, 4) parent arrays."""
    lo = np.minimum(pa, pb)
    hi = np.maximum(pa, pb)
    span = hi - lo
    low = lo - alpha * span
    width = span * (1.0 + 2.0 * alpha)
    c1 = low + rng.random(pa.shape) * width
    c2 = low + rng.random(pa.shape) * width
    return c1, c2


def gaussian_mutation(ind, p_m, mu, sigma, rng):
    """Each gene independently shifted by N(mu, sigma^2) with prob p_m."""
    genes = mutate_genes(ind.genes[None, :].copy(), p_m, mu, sigma, rng)
    return repair(Individual(genes[0]))


def mutate_genes(genes, p_m, mu, sigma, rng):
    """Vectorized Gaussian mutation on an (N, 4) gene array (in place)."""
    mask = rng.random(genes.shape) < p_m
    shift = rng.normal(mu, sigma, size=genes.shape)
    genes[mask] += shift[mask]
    return genes


def random_population_genes(rng, n):
    """Random genes: theta uniform in [0, pi], axis uniform on the sphere."""
    theta = rng.uniform(0.0, np.pi, size=n)
    axis = rng.normal(size=(n, 3))
    norms = np.linalg.norm(axis, axis=1)
    while np.any(norms < 1e-12):
        bad = norms < 1e-12
        axis[bad] = rng.normal(size=(int(bad.sum()), 3))
        norms = np.linalg.norm(axis, axis=1)
    return np.concatenate([theta[:, None], axis / norms[:, None]], axis=1)


def _tournament_indices(fitness, k, rng):
    """Winner index of each of N simultaneous k-member tournaments.

    Row-wise argpartition of i.i.d. uniform keys draws a uniform k-subset
    without replacement per tournament.
    """
    n = fitness.shape[0]
    keys = rng.random((n, n))
    subset = np.argpartition(keys, min(k - 1, n - 1), axis=1)[:, :k]
    winners = subset[np.arange(n), np.argmin(fitness[subset], axis=1)]
    return winners


def _assert_physical(genes):
    assert np.all(genes[:, 0] >= 0.0) and np.all(genes[:, 0] <= np.pi)
    assert np.allclose(np.linalg.norm(genes[:, 1:], axis=1), 1.0, atol=1e-12)


def _extract_initial_genes(initial, n):
    if isinstance(initial, Population):
        genes = np.array([ind.genes for ind in initial.individuals])
    else:
        genes = np.asarray(initial, dtype=float)
    if genes.shape != (n, 4):
        raise ValueError(
            f"initial population must have shape ({n}, 4), got {genes.shape}"
        )
    return genes.copy()


def run_ga(m, cfg=None, rng=None, initial=None):
    """Full genetic reconstruction of one measurement set.

    Sequence per generation: tournament selection into a mating pool, blend
    crossover of consecutive pairs (probability crossover_prob per pair),
    repair, Gaussian mutation, repair, fitness evaluation, replacement of
    the population by the offspring, elitism, best update. The returned
    cost is exactly the fitness of the returned best individual.
    """
    if cfg is None:
        cfg = GaConfig()
    if rng is None:
        rng = np.random.default_rng(cfg.seed)
    target = m.as_array()
    n = cfg.population
    t0 = time.perf_counter()

    if initial is None:
        genes = random_population_genes(rng, n)
    else:
        genes = _extract_initial_genes(initial, n)
    genes, _ = repair_genes(genes)
    if __debug__:
        _assert_physical(genes)
    fitness = mse_cost_genes(genes, target)
    evals = n
    best_idx = int(np.argmin(fitness))
    best_genes = genes[best_idx].copy()
    best_fit = float(fitness[best_idx])
    trace = [best_fit]

    half = n // 2
    for _ in range(cfg.generations):
        winners = _tournament_indices(fitness, cfg.tournament_k, rng)
        offspring = genes[winners].copy()

        cross = rng.random(half) < cfg.crossover_prob
        pa = offspring[0 : 2 * half : 2]
        pb = offspring[1 : 2 * half : 2]
        c1, c2 = blend_crossover_genes(pa, pb, cfg.blend_alpha, rng)
        pa[cross] = c1[cross]
        pb[cross] = c2[cross]
        offspring, _ = repair_genes(offspring)
        if __debug__:
            _assert_physical(offspring)

        offspring = mutate_genes(
            offspring, cfg.mutation_prob, cfg.mutation_mu, cfg.mutation_sigma,
            rng,
        )
        offspring, _ = repair_genes(offspring)
        if __debug__:
            _assert_physical(offspring)

        off_fit = mse_cost_genes(offspring, target)
        evals += n
        if cfg.elitism:
            worst = int(np.argmax(off_fit))
            offspring[worst] = best_genes
            off_fit[worst] = best_fit
        genes, fitness = offspring, off_fit
        best_idx = int(np.argmin(fitness))
        best_genes = genes[best_idx].copy()
        best_fit = float(fitness[best_idx])
        trace.append(best_fit)

    params = su2.canonicalize(su2.GateParams(best_genes[0], best_genes[1:]))
    return ReconstructionResult(
        params=params,
        cost=best_fit,
        elapsed=time.perf_counter() - t0,
        engine="ga",
        diagnostics={
            "generations": cfg.generations,
            "evaluations": evals,
            "best_cost_per_generation": trace,
            "best_genes": best_genes,
        },
    )
