from collections import namedtuple

import numpy as np

from evacflight.ef_strings import N_DESTINATIONS
from evacflight.fitness import DEFAULT_WEIGHTS, fitness, score_population

N_SELECTIONS = 2 ** N_DESTINATIONS

OracleResult = namedtuple('OracleResult',
                          ['best_selection', 'best_fitness', 'evaluations'])


def _all_selections():
    # row k is the binary expansion of k with bit 0 least significant, so
    # argmax picks the smallest integer encoding among equal scores
    codes = np.arange(N_SELECTIONS)[:, None]
    bits = (codes >> np.arange(N_DESTINATIONS)[None, :]) & 1
    bits = bits.astype(np.uint8)
    bits.flags.writeable = False
    return bits


ALL_SELECTIONS = _all_selections()


def selection_code(selection):
    """Unsigned integer encoding of a selection, bit 0 least significant"""
    bits = np.asarray(selection, dtype=np.int64)
    return int((bits << np.arange(N_DESTINATIONS)).sum())


def score_all(table, weights=DEFAULT_WEIGHTS):
    """Scores of all 1024 selections, indexed by their integer encoding"""
    return score_population(ALL_SELECTIONS, table, weights)


def solve_exhaustive(table, weights=DEFAULT_WEIGHTS):
    """Evaluate every selection and return the best one.

    Ties are resolved toward the smallest integer encoding of the bit string.

    Parameters
    ----------
    table: CandidateTable
    weights: FitnessWeights, optional

    Returns
    -------
    OracleResult
        best_selection (uint8 vector), best_fitness, and evaluations (1024).
    """
    scores = score_all(table, weights)
    best_code = int(np.argmax(scores))
    best = ALL_SELECTIONS[best_code].copy()
    return OracleResult(best, fitness(best, table, weights).score,
                        N_SELECTIONS)
