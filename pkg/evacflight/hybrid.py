from math import floor

import numpy as np

from evacflight.ef_strings import RANDOM_REPLACE, WORST_REPLACE, \
    APPROACH_NAMES
from evacflight.fitness import DEFAULT_WEIGHTS
from evacflight.ga import GaConfig, evolve
from evacflight.mlp import sample_individuals
from evacflight.settings import get_section, HYBRID_SECTION, GA_SECTION
from evacflight.util import derive_seed


class HybridConfig(object):
    """A GA run whose population receives network samples every generation.

    Attributes
    ----------
    ga: GaConfig
    injection_fraction: float
        Share of the population replaced each generation, in (0, 1].
    approach: str
        'random' (overwrite random positions) or 'worst' (overwrite the
        lowest-fitness members).
    model: MlpModel
        Trained network; shared read-only.
    """
    def __init__(self, ga, injection_fraction, approach, model):
        self.ga = ga
        self.injection_fraction = injection_fraction
        self.approach = approach
        self.model = model

        errs = []
        if not 0 < injection_fraction <= 1:
            errs.append(f"injection_fraction must be in (0, 1], got "
                        f"{injection_fraction}")
        elif self.injection_count < 1:
            errs.append(f"injection_fraction {injection_fraction} injects no "
                        f"individuals into a population of "
                        f"{ga.population_size}")
        if approach not in APPROACH_NAMES:
            errs.append(f"approach must be one of {', '.join(APPROACH_NAMES)}"
                        f", got '{approach}'")
        if model is None:
            errs.append("a trained model is required")
        if errs:
            raise ValueError("Invalid hybrid config: " + '; '.join(errs))

    @property
    def injection_count(self):
        """round(injection_fraction * population_size), halves rounded up"""
        return int(floor(self.injection_fraction * self.ga.population_size +
                         0.5))

    @classmethod
    def from_settings(cls, model, section=None, ga_section=None, seed=0,
                      **overrides):
        """Hybrid defaults: population and generations come from the
        'hybrid' section, rates from the 'ga' section.  Overrides may also
        set crossover_rate and mutation_rate."""
        if section is None:
            section = get_section(HYBRID_SECTION)
        if ga_section is None:
            ga_section = get_section(GA_SECTION)
        params = {'injection_fraction': section['injection_fraction'],
                  'approach': section['approach'],
                  'population_size': section['population_size'],
                  'num_generations': section['num_generations']}
        params.update({k: v for k, v in overrides.items() if v is not None})
        ga = GaConfig.from_settings(
            ga_section, population_size=params['population_size'],
            num_generations=params['num_generations'],
            crossover_rate=params.get('crossover_rate'),
            mutation_rate=params.get('mutation_rate'), seed=seed)
        return cls(ga, params['injection_fraction'], params['approach'],
                   model)

    def with_seed(self, seed):
        return HybridConfig(self.ga.with_seed(seed), self.injection_fraction,
                            self.approach, self.model)

    def to_dict(self):
        result = self.ga.to_dict()
        result.update({'injection_fraction': float(self.injection_fraction),
                       'approach': self.approach,
                       'model_epochs': self.model.metadata.get('epochs')})
        return result


def inject_random(population, nn_individuals, rng):
    """Overwrite len(nn_individuals) distinct, uniformly chosen positions"""
    n_injected = len(nn_individuals)
    if n_injected > len(population):
        raise ValueError(f"Cannot inject {n_injected} individuals into a "
                         f"population of {len(population)}")
    result = np.array(population, dtype=np.uint8)
    if n_injected == 0:
        return result
    positions = rng.choice(len(population), size=n_injected, replace=False)
    result[positions] = nn_individuals
    return result


def inject_worst(population, fitnesses, nn_individuals):
    """Overwrite the len(nn_individuals) lowest-fitness members.

    Members are ranked by descending fitness with a stable sort, so among
    equal scores the later members are replaced first.
    """
    n_injected = len(nn_individuals)
    if n_injected > len(population):
        raise ValueError(f"Cannot inject {n_injected} individuals into a "
                         f"population of {len(population)}")
    result = np.array(population, dtype=np.uint8)
    if n_injected == 0:
        return result
    ranked = np.argsort(-np.asarray(fitnesses, dtype=float), kind='stable')
    result[ranked[len(population) - n_injected:]] = nn_individuals
    return result


def run_hybrid(table, config, weights=DEFAULT_WEIGHTS, injection_count=None):
    """GA with network individuals injected after every replacement.

    Parameters
    ----------
    table: CandidateTable
    config: HybridConfig
    weights: FitnessWeights, optional
    injection_count: int, optional
        Overrides the count derived from injection_fraction; 0 reproduces
        run_ga exactly.

    Returns
    -------
    (np.ndarray, pd.DataFrame)
        Best-so-far selection and the trace, whose ``source`` column counts
        the injected members of each generation.
    """
    k = config.injection_count if injection_count is None else injection_count
    if not 0 <= k <= config.ga.population_size:
        raise ValueError(f"injection count {k} outside 0-"
                         f"{config.ga.population_size}")

    # separate stream so the GA draws are the same with or without injection
    nn_rng = np.random.default_rng(derive_seed(config.ga.seed,
                                               'nn_sampling'))

    def inject(population, fitnesses):
        if k == 0:
            return population, 0
        nn_individuals = sample_individuals(config.model, table, k, nn_rng)
        if config.approach == RANDOM_REPLACE:
            population = inject_random(population, nn_individuals, nn_rng)
        elif config.approach == WORST_REPLACE:
            population = inject_worst(population, fitnesses, nn_individuals)
        return population, k

    return evolve(table, config.ga, weights, inject=inject)
