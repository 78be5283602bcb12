import json
import os
import warnings
from collections import namedtuple

import numpy as np
import pandas as pd

from evacflight.capability import compute_hourly_capability, \
    top_destinations, build_candidate_table, ingest_operations, \
    ingest_flight_history, InsufficientDestinationsError, HOURS_PER_DAY
from evacflight.ef_strings import AIRPORT_KEY, DATE_KEY, HOUR_KEY, \
    ORIGIN_KEY, DEST_ID_KEY, N_DAYS_KEY, N_FLIGHTS_KEY, FITNESS_KEY, \
    SELECTION_KEY, DESTINATIONS_KEY, SOLVER_KEY, CONFIG_LABEL_KEY, SEED_KEY, \
    HAMMING_KEY, ORACLE_FITNESS_KEY, SCHEDULE_CSV_COLUMNS, \
    DESTINATION_DELIMITER, ORACLE_SOLVER, GA_SOLVER, HYBRID_SOLVER, \
    SOLVER_NAMES, EVAC_CAPABILITY_KEY, RANDOM_REPLACE, WORST_REPLACE
from evacflight.fitness import DEFAULT_WEIGHTS, fitness, popcount, \
    selection_to_str, selection_from_str
from evacflight.ga import GaConfig, run_ga
from evacflight.hybrid import HybridConfig, run_hybrid
from evacflight.mlp import EmptyDatasetError, synthesize_dataset, \
    train_from_settings
from evacflight.oracle import solve_exhaustive
from evacflight.settings import get_section, GA_SECTION, HYBRID_SECTION
from evacflight.util import check_fp, derive_seed, write_frame, write_json

SCHEDULE_JSON_FNAME = 'schedule.json'
SCHEDULE_CSV_FNAME = 'schedule.csv'

AGREE_KEY = "n_flights_agree"
REFERENCE_N_FLIGHTS_KEY = "reference_n_flights"


class HistoryData(object):
    """Ingested operations and flight history, with per-airport capability
    profiles and top-ten destination lists computed on first use."""
    def __init__(self, operations, flight_history):
        self.operations = operations
        self.flight_history = flight_history
        self._capabilities = {}
        self._destinations = {}

    @classmethod
    def from_files(cls, operations_fp, flight_history_fp):
        return cls(ingest_operations(operations_fp),
                   ingest_flight_history(flight_history_fp))

    @property
    def airports(self):
        return sorted(self.operations[AIRPORT_KEY].unique())

    @property
    def origins(self):
        return sorted(self.flight_history[ORIGIN_KEY].unique())

    def data_window(self):
        """First and last date of the operations records and the day count"""
        dates = sorted(self.operations[DATE_KEY].unique())
        if len(dates) == 0:
            return {'first_date': None, 'last_date': None, 'n_days': 0}
        return {'first_date': dates[0], 'last_date': dates[-1],
                'n_days': len(dates)}

    def capability(self, airport):
        if airport not in self._capabilities:
            self._capabilities[airport] = compute_hourly_capability(
                self.operations, airport)
        return self._capabilities[airport]

    def destinations(self, airport):
        if airport not in self._destinations:
            self._destinations[airport] = top_destinations(
                self.flight_history, airport)
        return self._destinations[airport]

    def candidate_tables(self, evac_airport):
        """The 24 candidate tables of an airport, one per departure hour"""
        dests = self.destinations(evac_airport)
        evac_caps = self.capability(evac_airport)
        dest_caps = {d: self.capability(d) for d in dests[DEST_ID_KEY]}
        return [build_candidate_table(evac_caps, dest_caps, dests, hour)
                for hour in range(HOURS_PER_DAY)]

    def training_tables(self, exclude=None):
        """Candidate tables of every origin except the held-out ones.

        Parameters
        ----------
        exclude: str or sequence of str, optional
            Airport(s) left out of the tables.

        Returns
        -------
        (list of CandidateTable, pd.DataFrame)
            The tables and an index frame naming the airport and hour of
            each table, in the same order.
        """
        if isinstance(exclude, str):
            exclude = [exclude]
        exclude = set(exclude or [])

        tables = []
        for airport in self.origins:
            if airport in exclude:
                continue
            try:
                tables.extend(self.candidate_tables(airport))
            except InsufficientDestinationsError as e:
                warnings.warn(f"Skipping '{airport}': {e}")

        index = pd.DataFrame({
            AIRPORT_KEY: [t.evac_airport for t in tables],
            HOUR_KEY: [t.depart_hour for t in tables]},
            columns=[AIRPORT_KEY, HOUR_KEY])
        return tables, index


class SolverSpec(object):
    """A solver choice and its configuration.

    Parameters
    ----------
    solver: str
        'oracle', 'ga' or 'hybrid'.
    config: GaConfig or HybridConfig, optional
        Required for 'ga' and 'hybrid'; its seed is replaced per hour.
    label: str, optional
        Name of the configuration in comparison reports.
    """
    def __init__(self, solver, config=None, label=None):
        if solver not in SOLVER_NAMES:
            raise ValueError(f"Unknown solver '{solver}'; expected one of "
                             f"{', '.join(SOLVER_NAMES)}")
        if solver != ORACLE_SOLVER and config is None:
            raise ValueError(f"Solver '{solver}' needs a config")
        self.solver = solver
        self.config = config
        self.label = label if label is not None else self._default_label()

    def _default_label(self):
        if self.solver == ORACLE_SOLVER:
            return ORACLE_SOLVER
        if self.solver == GA_SOLVER:
            return (f"ga_p{self.config.population_size}"
                    f"_g{self.config.num_generations}")
        ga = self.config.ga
        label = (f"hybrid_{self.config.approach}_p{ga.population_size}"
                 f"_g{ga.num_generations}")
        epochs = self.config.model.metadata.get('epochs')
        if epochs is not None:
            label += f"_e{epochs}"
        return label

    def solve(self, table, seed, weights=DEFAULT_WEIGHTS):
        """Best selection for one table; seed is ignored by the oracle"""
        if self.solver == ORACLE_SOLVER:
            return solve_exhaustive(table, weights).best_selection
        if self.solver == GA_SOLVER:
            best, _ = run_ga(table, self.config.with_seed(seed), weights)
        else:
            best, _ = run_hybrid(table, self.config.with_seed(seed), weights)
        return best

    def to_dict(self):
        result = {'solver': self.solver, 'label': self.label}
        if self.config is not None:
            config = self.config.to_dict()
            config.pop('seed')
            result['config'] = config
        return result


HourlySchedule = namedtuple(
    'HourlySchedule',
    ['hour', 'selection', 'n_flights', 'fitness', 'solver', 'destinations',
     'capability', 'n_days'])
HourlySchedule.__doc__ = """The flights scheduled at one departure hour.

destinations are the dest_ids of the set bits in table row order; capability
is the evacuating airport's C at the hour and n_days the fewest days behind
any destination's capability profile.
"""


def make_hourly_schedule(table, selection, solver, weights=DEFAULT_WEIGHTS):
    selection = np.asarray(selection, dtype=np.uint8)
    dest_ids = table.dest_ids
    return HourlySchedule(
        hour=table.depart_hour,
        selection=selection,
        n_flights=popcount(selection),
        fitness=fitness(selection, table, weights).score,
        solver=solver,
        destinations=[dest_ids[i] for i in np.flatnonzero(selection)],
        capability=table.capability,
        n_days=int(table.rows[N_DAYS_KEY].min()))


class DaySchedule(object):
    """24 hourly schedules of one evacuating airport"""
    def __init__(self, evac_airport, entries, solver_config, data_window,
                 seed=None):
        hours = sorted(e.hour for e in entries)
        if hours != list(range(HOURS_PER_DAY)):
            raise ValueError(f"A day schedule needs exactly one entry per "
                             f"hour 0-23, got hours {hours}")
        self.evac_airport = evac_airport
        self.entries = sorted(entries, key=lambda e: e.hour)
        self.solver_config = solver_config
        self.data_window = data_window
        self.seed = seed

    @property
    def total_fitness(self):
        return float(sum(e.fitness for e in self.entries))

    @property
    def n_flights(self):
        return [e.n_flights for e in self.entries]

    def to_frame(self):
        """Plot-ready frame: hour, n_flights, fitness, selection,
        destinations"""
        return pd.DataFrame(
            [[e.hour, e.n_flights, e.fitness, selection_to_str(e.selection),
              DESTINATION_DELIMITER.join(e.destinations)]
             for e in self.entries],
            columns=list(SCHEDULE_CSV_COLUMNS))

    def to_dict(self):
        return {
            'evac_airport': self.evac_airport,
            'seed': self.seed,
            'solver': self.solver_config,
            'data_window': self.data_window,
            'total_fitness': self.total_fitness,
            'hours': [{HOUR_KEY: e.hour,
                       N_FLIGHTS_KEY: e.n_flights,
                       FITNESS_KEY: e.fitness,
                       SELECTION_KEY: selection_to_str(e.selection),
                       DESTINATIONS_KEY: list(e.destinations),
                       SOLVER_KEY: e.solver,
                       EVAC_CAPABILITY_KEY: e.capability,
                       N_DAYS_KEY: e.n_days}
                      for e in self.entries]}

    def write(self, output_dir):
        """Write schedule.json and schedule.csv; returns both paths"""
        os.makedirs(output_dir, exist_ok=True)
        json_fp = os.path.join(output_dir, SCHEDULE_JSON_FNAME)
        csv_fp = os.path.join(output_dir, SCHEDULE_CSV_FNAME)
        write_json(self.to_dict(), json_fp)
        write_frame(self.to_frame(), csv_fp)
        return json_fp, csv_fp

    @classmethod
    def from_dict(cls, schedule_dict):
        entries = [HourlySchedule(
            hour=h[HOUR_KEY],
            selection=selection_from_str(h[SELECTION_KEY]),
            n_flights=h[N_FLIGHTS_KEY],
            fitness=h[FITNESS_KEY],
            solver=h[SOLVER_KEY],
            destinations=list(h[DESTINATIONS_KEY]),
            capability=h[EVAC_CAPABILITY_KEY],
            n_days=h[N_DAYS_KEY]) for h in schedule_dict['hours']]
        return cls(schedule_dict['evac_airport'], entries,
                   schedule_dict['solver'], schedule_dict['data_window'],
                   schedule_dict.get('seed'))


def read_schedule(fp):
    """Load a DaySchedule written by DaySchedule.write"""
    check_fp(fp)
    with open(fp, 'r', encoding='utf-8') as f:
        try:
            return DaySchedule.from_dict(json.load(f))
        except (KeyError, TypeError) as e:
            raise ValueError(f"'{fp}' is not a day schedule: missing {e}")


def build_day_schedule(evac_airport, data, solver, seed=0,
                       weights=DEFAULT_WEIGHTS):
    """Solve the 24 hourly candidate tables of an airport independently.

    Parameters
    ----------
    evac_airport: str
    data: HistoryData
    solver: SolverSpec
    seed: int, optional
        Global seed; hour h runs with derive_seed(seed, 'ga', h).
    weights: FitnessWeights, optional

    Returns
    -------
    DaySchedule

    Raises
    ------
    InsufficientDestinationsError
        If the airport serves fewer than ten destinations.
    """
    entries = []
    for table in data.candidate_tables(evac_airport):
        hour_seed = derive_seed(seed, 'ga', table.depart_hour)
        selection = solver.solve(table, hour_seed, weights)
        entries.append(make_hourly_schedule(table, selection, solver.solver,
                                            weights))
    return DaySchedule(evac_airport, entries, solver.to_dict(),
                       data.data_window(), seed)


def flight_count_agreement(schedule_a, schedule_b):
    """Hour-by-hour comparison of two schedules' flight counts.

    Returns
    -------
    pd.DataFrame
        hour, n_flights_a, n_flights_b, agree and the capability C of the
        evacuating airport at the hour (taken from schedule_a).
    """
    return pd.DataFrame({
        HOUR_KEY: [e.hour for e in schedule_a.entries],
        'n_flights_a': schedule_a.n_flights,
        'n_flights_b': schedule_b.n_flights,
        'agree': [a == b for a, b in zip(schedule_a.n_flights,
                                         schedule_b.n_flights)],
        EVAC_CAPABILITY_KEY: [e.capability for e in schedule_a.entries]})


def _hamming(bits_a, bits_b):
    return int(np.sum(np.asarray(bits_a) != np.asarray(bits_b)))


def compare_solvers(evac_airport, data, solvers, n_seeds=10, seed=0,
                    weights=DEFAULT_WEIGHTS):
    """Run several solver configs over the same tables and seeds.

    The first config is the reference: every row records the Hamming
    distance between its selection and the reference's selection for the
    same hour and seed, and whether the flight counts agree.  Seed index i
    of hour h runs every config with derive_seed(seed, 'compare', h, i).

    Parameters
    ----------
    evac_airport: str
    data: HistoryData
    solvers: list of SolverSpec
        At least two, with distinct labels.
    n_seeds: int, optional
    seed: int, optional
    weights: FitnessWeights, optional

    Returns
    -------
    pd.DataFrame
        One row per (hour, config, seed) with the fitness, flight count,
        selection, Hamming distance, oracle fitness, capability and n_days.
    """
    if len(solvers) < 2:
        raise ValueError("At least two solver configs are needed for a "
                         "comparison")
    labels = [s.label for s in solvers]
    if len(set(labels)) != len(labels):
        raise ValueError(f"Solver labels must be distinct: {labels}")
    if n_seeds < 1:
        raise ValueError(f"n_seeds must be positive, got {n_seeds}")

    records = []
    for table in data.candidate_tables(evac_airport):
        hour = table.depart_hour
        oracle_fitness = solve_exhaustive(table, weights).best_fitness
        n_days = int(table.rows[N_DAYS_KEY].min())
        for seed_idx in range(n_seeds):
            run_seed = derive_seed(seed, 'compare', hour, seed_idx)
            reference = None
            for solver in solvers:
                selection = solver.solve(table, run_seed, weights)
                if reference is None:
                    reference = selection
                records.append({
                    HOUR_KEY: hour,
                    CONFIG_LABEL_KEY: solver.label,
                    SOLVER_KEY: solver.solver,
                    SEED_KEY: seed_idx,
                    FITNESS_KEY: fitness(selection, table, weights).score,
                    N_FLIGHTS_KEY: popcount(selection),
                    SELECTION_KEY: selection_to_str(selection),
                    HAMMING_KEY: _hamming(selection, reference),
                    REFERENCE_N_FLIGHTS_KEY: popcount(reference),
                    ORACLE_FITNESS_KEY: oracle_fitness,
                    EVAC_CAPABILITY_KEY: table.capability,
                    N_DAYS_KEY: n_days})

    report = pd.DataFrame(records)
    report[AGREE_KEY] = \
        report[N_FLIGHTS_KEY] == report[REFERENCE_N_FLIGHTS_KEY]
    return report


def summarize_by_hour(report):
    """Mean and spread over seeds per (config, hour)"""
    grouped = report.groupby([CONFIG_LABEL_KEY, HOUR_KEY], sort=False)
    summary = grouped.agg(
        mean_fitness=(FITNESS_KEY, 'mean'),
        std_fitness=(FITNESS_KEY, lambda x: float(np.std(x))),
        mean_n_flights=(N_FLIGHTS_KEY, 'mean'),
        mean_hamming=(HAMMING_KEY, 'mean'),
        oracle_fitness=(ORACLE_FITNESS_KEY, 'first'),
        capability=(EVAC_CAPABILITY_KEY, 'first'),
        n_days=(N_DAYS_KEY, 'first'))
    return summary.reset_index()


def summarize_by_config(report):
    """One row per config: mean fitness, gap to the oracle, share of optimal
    runs and flight-count agreement with the reference config."""
    report = report.copy()
    report['oracle_gap'] = report[ORACLE_FITNESS_KEY] - report[FITNESS_KEY]
    report['optimal'] = np.isclose(report[FITNESS_KEY],
                                   report[ORACLE_FITNESS_KEY], rtol=0,
                                   atol=1e-9)
    grouped = report.groupby(CONFIG_LABEL_KEY, sort=False)
    summary = grouped.agg(
        solver=(SOLVER_KEY, 'first'),
        mean_fitness=(FITNESS_KEY, 'mean'),
        std_fitness=(FITNESS_KEY, lambda x: float(np.std(x))),
        mean_oracle_fitness=(ORACLE_FITNESS_KEY, 'mean'),
        mean_oracle_gap=('oracle_gap', 'mean'),
        optimal_rate=('optimal', 'mean'),
        mean_n_flights=(N_FLIGHTS_KEY, 'mean'),
        agreement_rate=(AGREE_KEY, 'mean'))
    return summary.reset_index()


def selection_frequency(report, dest_ids):
    """How often each config selects each destination.

    Parameters
    ----------
    report: pd.DataFrame
        Output of compare_solvers.
    dest_ids: list of str
        The evacuating airport's top ten, in table row order.

    Returns
    -------
    pd.DataFrame
        config, dest_id, frequency (share of (hour, seed) runs selecting the
        destination) and flights_per_day (mean selections over a day).
    """
    records = []
    for label, rows in report.groupby(CONFIG_LABEL_KEY, sort=False):
        bits = np.vstack([selection_from_str(s) for s in rows[SELECTION_KEY]])
        n_seeds = rows[SEED_KEY].nunique()
        for i, dest_id in enumerate(dest_ids):
            records.append({CONFIG_LABEL_KEY: label,
                            DEST_ID_KEY: dest_id,
                            'frequency': float(bits[:, i].mean()),
                            'flights_per_day': float(bits[:, i].sum() /
                                                     n_seeds)})
    return pd.DataFrame(records)


def ga_solver(population_size, num_generations, ga_section=None):
    return SolverSpec(GA_SOLVER, GaConfig.from_settings(
        ga_section, population_size=population_size,
        num_generations=num_generations))


def train_held_out_model(data, evac_airport, seed, mlp_section=None,
                         weights=DEFAULT_WEIGHTS, **overrides):
    """Train a network on every origin's tables except evac_airport's.

    Raises
    ------
    EmptyDatasetError
        If no other airport contributes a table.
    """
    tables, _ = data.training_tables(exclude=evac_airport)
    dataset = synthesize_dataset(tables, weights)
    if len(dataset) == 0:
        raise EmptyDatasetError(f"No training tables remain once "
                                f"'{evac_airport}' is held out")
    return train_from_settings(dataset, seed, mlp_section, **overrides)


def hybrid_solver(model, approach=None, population_size=None,
                  num_generations=None, injection_fraction=None,
                  crossover_rate=None, mutation_rate=None,
                  hybrid_section=None, ga_section=None):
    return SolverSpec(HYBRID_SOLVER, HybridConfig.from_settings(
        model, hybrid_section, ga_section, approach=approach,
        population_size=population_size, num_generations=num_generations,
        injection_fraction=injection_fraction, crossover_rate=crossover_rate,
        mutation_rate=mutation_rate))


def popgen_sweep(population_sizes, generations, ga_section=None):
    """Plain GA configs over a population-size x generation grid"""
    return [ga_solver(p, g, ga_section) for p in population_sizes
            for g in generations]


def epoch_sweep(models, hybrid_section=None, ga_section=None):
    """The plain GA at the hybrid's population and generations, followed by
    one hybrid config per trained model."""
    if hybrid_section is None:
        hybrid_section = get_section(HYBRID_SECTION)
    solvers = [ga_solver(hybrid_section['population_size'],
                         hybrid_section['num_generations'], ga_section)]
    solvers.extend(hybrid_solver(m, hybrid_section=hybrid_section,
                                 ga_section=ga_section) for m in models)
    return solvers


def approach_sweep(model, hybrid_section=None, ga_section=None):
    """Small plain GA, both injection approaches at the same size, and the
    large plain GA."""
    if hybrid_section is None:
        hybrid_section = get_section(HYBRID_SECTION)
    if ga_section is None:
        ga_section = get_section(GA_SECTION)
    small_pop = hybrid_section['population_size']
    small_gens = hybrid_section['num_generations']
    return [ga_solver(small_pop, small_gens, ga_section),
            hybrid_solver(model, RANDOM_REPLACE, hybrid_section=hybrid_section,
                          ga_section=ga_section),
            hybrid_solver(model, WORST_REPLACE, hybrid_section=hybrid_section,
                          ga_section=ga_section),
            ga_solver(ga_section['population_size'],
                      ga_section['num_generations'], ga_section)]


def solvers_from_entries(entries, model=None, hybrid_section=None,
                         ga_section=None):
    """SolverSpecs from run-config entries such as
    ``{'solver': 'ga', 'population_size': 30, 'num_generations': 10}``.

    Keys other than solver and label fall back to the settings sections.
    """
    solvers = []
    for i, entry in enumerate(entries):
        entry = dict(entry)
        name = entry.pop('solver', None)
        label = entry.pop('label', None)
        if name not in _ENTRY_KEYS:
            raise ValueError(f"Solver entry {i} has unknown solver "
                             f"'{name}'; expected one of "
                             f"{', '.join(SOLVER_NAMES)}")
        unknown = sorted(set(entry) - set(_ENTRY_KEYS[name]))
        if unknown:
            raise ValueError(f"Solver entry {i} has unrecognized keys: "
                             f"{', '.join(unknown)}")

        if name == ORACLE_SOLVER:
            spec = SolverSpec(ORACLE_SOLVER)
        elif name == GA_SOLVER:
            spec = SolverSpec(GA_SOLVER,
                              GaConfig.from_settings(ga_section, **entry))
        else:
            if model is None:
                raise ValueError(f"Solver entry {i} is a hybrid but no model "
                                 f"was given")
            spec = hybrid_solver(model, hybrid_section=hybrid_section,
                                 ga_section=ga_section, **entry)
        if label is not None:
            spec.label = label
        solvers.append(spec)
    return solvers


_GA_ENTRY_KEYS = ('population_size', 'num_generations', 'crossover_rate',
                  'mutation_rate')
# keys a run-config solver entry may set besides solver and label
_ENTRY_KEYS = {ORACLE_SOLVER: (),
               GA_SOLVER: _GA_ENTRY_KEYS,
               HYBRID_SOLVER: _GA_ENTRY_KEYS + ('approach',
                                                'injection_fraction')}
