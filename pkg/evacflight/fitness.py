from collections import namedtuple

import numpy as np

from evacflight.ef_strings import N_DESTINATIONS
from evacflight.settings import get_section, FITNESS_SECTION


FitnessWeights = namedtuple('FitnessWeights', ['p', 'c', 's', 'penalty'])

FitnessBreakdown = namedtuple(
    'FitnessBreakdown',
    ['score', 'p_term', 'c_term', 's_term', 'penalty', 'n_selected'])
FitnessBreakdown.__doc__ = """Score of one selection and its parts.

p_term, c_term and s_term are the sums of normalized p, c and s over the
selected rows; score is 0.5 * p_term + 0.2 * c_term - 0.3 * s_term - penalty
with the default weights.
"""

DEFAULT_WEIGHTS = FitnessWeights(0.5, 0.2, 0.3, 1.0)


def weights_from_settings(section=None):
    if section is None:
        section = get_section(FITNESS_SECTION)
    return FitnessWeights(float(section['weight_p']),
                          float(section['weight_c']),
                          float(section['weight_s']),
                          float(section['penalty']))


def validate_selection(selection):
    """Coerce to a length-10 uint8 vector of 0/1 values.

    Raises
    ------
    ValueError
        If the input doesn't have exactly ten binary elements.
    """
    arr = np.asarray(selection)
    if arr.shape != (N_DESTINATIONS,):
        raise ValueError(f"A selection has exactly {N_DESTINATIONS} bits, "
                         f"got shape {arr.shape}")
    if not np.isin(arr, (0, 1)).all():
        raise ValueError(f"Selection bits must be 0 or 1: {arr.tolist()}")
    return arr.astype(np.uint8)


def selection_to_str(selection):
    """'0'/'1' string with bit 0 first, e.g. '1010000001'"""
    return ''.join(str(int(b)) for b in validate_selection(selection))


def selection_from_str(bits):
    if len(bits) != N_DESTINATIONS or set(bits) - {'0', '1'}:
        raise ValueError(f"'{bits}' is not a {N_DESTINATIONS}-character "
                         f"string of 0 and 1")
    return np.array([int(b) for b in bits], dtype=np.uint8)


def popcount(selection):
    """Number of selected destinations, i.e. evacuation flights that hour"""
    return int(validate_selection(selection).sum())


def _terms(population, table):
    selected = np.asarray(population, dtype=bool)
    p_term = np.where(selected, table.p, 0.0).sum(axis=1)
    c_term = np.where(selected, table.c, 0.0).sum(axis=1)
    s_term = np.where(selected, table.s, 0.0).sum(axis=1)
    n_selected = selected.sum(axis=1)
    return p_term, c_term, s_term, n_selected


def score_population(population, table, weights=DEFAULT_WEIGHTS):
    """Fitness scores of every row of an (n, 10) 0/1 array.

    Each row is summed independently, so a row scores the same whether it is
    evaluated alone or inside a larger population.
    """
    p_term, c_term, s_term, n_selected = _terms(population, table)
    penalty = np.where(n_selected > table.capability, weights.penalty, 0.0)
    return (weights.p * p_term + weights.c * c_term - weights.s * s_term -
            penalty)


def fitness(selection, table, weights=DEFAULT_WEIGHTS):
    """Score one selection against a candidate table.

    Parameters
    ----------
    selection: array-like of 10 ints in {0, 1}
        Bit i selects table.rows.iloc[i].
    table: CandidateTable
        Normalized candidate values and the evacuating capability C.
    weights: FitnessWeights
        Defaults to 0.5 / 0.2 / 0.3 with a penalty of 1.

    Returns
    -------
    FitnessBreakdown
        The penalty applies once, when more flights are selected than C.
    """
    population = validate_selection(selection)[None, :]
    p_term, c_term, s_term, n_selected = _terms(population, table)
    score = score_population(population, table, weights)[0]
    n = int(n_selected[0])
    penalty = weights.penalty if n > table.capability else 0.0
    return FitnessBreakdown(float(score), float(p_term[0]), float(c_term[0]),
                            float(s_term[0]), penalty, n)
