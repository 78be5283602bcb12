import numpy as np
import pandas as pd

from evacflight.ef_strings import N_DESTINATIONS, GENERATION_KEY, \
    BEST_KEY, MEAN_KEY, BEST_SO_FAR_KEY, SOURCE_KEY, TRACE_COLUMNS
from evacflight.fitness import DEFAULT_WEIGHTS, score_population
from evacflight.settings import get_section, GA_SECTION

# added to min-shifted fitnesses so the weakest individual keeps a chance
ROULETTE_EPSILON = 1e-6


class GaConfig(object):
    """Parameters of one genetic-algorithm run.

    Attributes
    ----------
    population_size: int
        At least 2.  Children are produced in pairs; with an odd size the
        second child of the last pair is not kept.
    num_generations: int
        Number of full generational replacements.
    crossover_rate: float
        Probability that a parent pair is spliced, in [0, 1].
    mutation_rate: float
        Per-bit flip probability, in [0, 1].
    seed: int
        Seed of the run's random stream.
    """
    def __init__(self, population_size=75, num_generations=25,
                 crossover_rate=0.9, mutation_rate=0.05, seed=0):
        self.population_size = population_size
        self.num_generations = num_generations
        self.crossover_rate = crossover_rate
        self.mutation_rate = mutation_rate
        self.seed = seed
        self._validate()

    def _validate(self):
        errs = []
        if not isinstance(self.population_size, (int, np.integer)) or \
                self.population_size < 2:
            errs.append(f"population_size must be an integer >= 2, got "
                        f"{self.population_size}")
        if not isinstance(self.num_generations, (int, np.integer)) or \
                self.num_generations < 1:
            errs.append(f"num_generations must be a positive integer, got "
                        f"{self.num_generations}")
        for name in ('crossover_rate', 'mutation_rate'):
            value = getattr(self, name)
            if not 0 <= value <= 1:
                errs.append(f"{name} must be in [0, 1], got {value}")
        if not isinstance(self.seed, (int, np.integer)) or self.seed < 0:
            errs.append(f"seed must be a non-negative integer, got "
                        f"{self.seed}")
        if errs:
            raise ValueError("Invalid GA config: " + '; '.join(errs))

    @classmethod
    def from_settings(cls, section=None, **overrides):
        if section is None:
            section = get_section(GA_SECTION)
        params = {k: section[k] for k in ('population_size',
                                          'num_generations',
                                          'crossover_rate', 'mutation_rate')}
        params.update({k: v for k, v in overrides.items() if v is not None})
        return cls(**params)

    def with_seed(self, seed):
        return GaConfig(self.population_size, self.num_generations,
                        self.crossover_rate, self.mutation_rate, seed)

    def to_dict(self):
        return {'population_size': int(self.population_size),
                'num_generations': int(self.num_generations),
                'crossover_rate': float(self.crossover_rate),
                'mutation_rate': float(self.mutation_rate),
                'seed': int(self.seed)}

    def __repr__(self):
        return 'GaConfig(%s)' % ', '.join(
            f'{k}={v}' for k, v in self.to_dict().items())


def init_population(size, rng):
    """`size` random selections, each bit uniform over {0, 1}"""
    if size < 2:
        raise ValueError(f"Population size must be at least 2, got {size}")
    return rng.integers(0, 2, size=(size, N_DESTINATIONS), dtype=np.uint8)


def _roulette_indices(fitnesses, k, rng):
    fitnesses = np.asarray(fitnesses, dtype=float)
    weights = fitnesses - fitnesses.min() + ROULETTE_EPSILON
    if np.all(weights == weights[0]):
        return rng.integers(0, len(weights), size=k)
    return rng.choice(len(weights), size=k, p=weights / weights.sum())


def select_parent(population, fitnesses, rng):
    """Roulette-wheel draw over min-shifted fitnesses.

    Negative scores (the penalty can push below zero) are handled by shifting
    every weight by the minimum fitness plus ROULETTE_EPSILON.
    """
    if len(population) == 0:
        raise ValueError("Cannot select from an empty population")
    idx = _roulette_indices(fitnesses, 1, rng)[0]
    return np.array(population[idx], dtype=np.uint8)


def splice(parent1, parent2, cut):
    """Single-point crossover at a fixed cut point (1-9)"""
    parent1 = np.asarray(parent1, dtype=np.uint8)
    parent2 = np.asarray(parent2, dtype=np.uint8)
    child1 = np.concatenate([parent1[:cut], parent2[cut:]])
    child2 = np.concatenate([parent2[:cut], parent1[cut:]])
    return child1, child2


def _crossover_pairs(parents1, parents2, crossover_rate, rng):
    n_pairs = len(parents1)
    crossing = rng.random(n_pairs) < crossover_rate
    cuts = rng.integers(1, N_DESTINATIONS, size=n_pairs)

    # a pair that doesn't cross keeps the cut past the end: copies of parents
    cuts = np.where(crossing, cuts, N_DESTINATIONS)
    take_first = np.arange(N_DESTINATIONS)[None, :] < cuts[:, None]
    children1 = np.where(take_first, parents1, parents2).astype(np.uint8)
    children2 = np.where(take_first, parents2, parents1).astype(np.uint8)
    return children1, children2


def crossover(parent1, parent2, crossover_rate, rng):
    """With probability crossover_rate, splice at a cut uniform in 1..9;
    otherwise return copies of the parents."""
    children1, children2 = _crossover_pairs(
        np.asarray(parent1, dtype=np.uint8)[None, :],
        np.asarray(parent2, dtype=np.uint8)[None, :], crossover_rate, rng)
    return children1[0], children2[0]


def _mutate_population(population, mutation_rate, rng):
    flips = rng.random(population.shape) < mutation_rate
    return (population ^ flips).astype(np.uint8)


def mutate(child, mutation_rate, rng):
    """Flip each bit independently with probability mutation_rate"""
    child = np.asarray(child, dtype=np.uint8)
    return _mutate_population(child[None, :], mutation_rate, rng)[0]


def next_generation(population, fitnesses, config, rng):
    """Breed a full replacement population: roulette parents, crossover,
    mutation."""
    size = len(population)
    n_pairs = (size + 1) // 2
    parent_idx = _roulette_indices(fitnesses, 2 * n_pairs, rng)
    parents1 = population[parent_idx[0::2]]
    parents2 = population[parent_idx[1::2]]
    children1, children2 = _crossover_pairs(parents1, parents2,
                                            config.crossover_rate, rng)

    children = np.empty((2 * n_pairs, N_DESTINATIONS), dtype=np.uint8)
    children[0::2] = _mutate_population(children1, config.mutation_rate, rng)
    children[1::2] = _mutate_population(children2, config.mutation_rate, rng)
    return children[:size]


def evolve(table, config, weights=DEFAULT_WEIGHTS, inject=None):
    """Run the generational loop, optionally letting `inject` rewrite every
    new population before it is scored.

    Parameters
    ----------
    table: CandidateTable
    config: GaConfig
    weights: FitnessWeights, optional
    inject: callable, optional
        Called as ``inject(population, fitnesses)`` right after each
        replacement; returns ``(population, n_injected)``.

    Returns
    -------
    (np.ndarray, pd.DataFrame)
        The best individual seen in any generation (the initial population
        included) and the per-generation trace.  The trace gets a ``source``
        column with n_injected when inject is given.
    """
    rng = np.random.default_rng(config.seed)
    population = init_population(config.population_size, rng)
    fitnesses = score_population(population, table, weights)

    best_idx = int(np.argmax(fitnesses))
    best = population[best_idx].copy()
    best_fitness = fitnesses[best_idx]

    records = []
    for generation in range(1, config.num_generations + 1):
        population = next_generation(population, fitnesses, config, rng)
        fitnesses = score_population(population, table, weights)

        record = {}
        if inject is not None:
            population, n_injected = inject(population, fitnesses)
            fitnesses = score_population(population, table, weights)
            record[SOURCE_KEY] = n_injected

        gen_best_idx = int(np.argmax(fitnesses))
        if fitnesses[gen_best_idx] > best_fitness:
            best = population[gen_best_idx].copy()
            best_fitness = fitnesses[gen_best_idx]

        record.update({GENERATION_KEY: generation,
                       BEST_KEY: float(fitnesses[gen_best_idx]),
                       MEAN_KEY: float(fitnesses.mean()),
                       BEST_SO_FAR_KEY: float(best_fitness)})
        records.append(record)

    columns = list(TRACE_COLUMNS)
    if inject is not None:
        columns.append(SOURCE_KEY)
    trace = pd.DataFrame(records, columns=columns)
    return best, trace


def run_ga(table, config, weights=DEFAULT_WEIGHTS):
    """Plain generational GA: no elitism, full replacement each generation.

    Returns
    -------
    (np.ndarray, pd.DataFrame)
        The best-so-far selection over all generations and the trace with
        columns generation, best, mean, best_so_far.  ``best`` at the last
        generation is the final population's best.
    """
    return evolve(table, config, weights)
