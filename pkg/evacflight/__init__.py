#!/usr/bin/env python
from .ef_strings import (AIRPORT_KEY, DATE_KEY, HOUR_KEY, CLASS_KEY, COUNT_KEY,
                         ORIGIN_KEY, DEST_KEY, DURATION_KEY, DEST_ID_KEY,
                         N_DESTINATIONS, FEATURE_KEYS, EVAC_CAPABILITY_KEY,
                         LABEL_KEYS, DATASET_COLUMNS, is_valid_airport_id)
from .capability import (ingest_operations, ingest_flight_history,
                         compute_hourly_capability, top_destinations,
                         build_candidate_table, CandidateTable, SchemaError,
                         RowError, EmptyHistoryError,
                         InsufficientDestinationsError)
from .synthetic import (SyntheticConfig, generate_synthetic_history,
                        write_synthetic_history)
from .fitness import (FitnessWeights, DEFAULT_WEIGHTS, fitness,
                      score_population, popcount, weights_from_settings)
from .oracle import solve_exhaustive
from .ga import (GaConfig, init_population, select_parent, crossover, mutate,
                 run_ga)
from .mlp import (MlpModel, synthesize_dataset, train, predict,
                  sample_individuals, evaluate, DivergenceError,
                  EmptyDatasetError)
from .hybrid import HybridConfig, inject_random, inject_worst, run_hybrid
from .scheduler import (HistoryData, SolverSpec, HourlySchedule, DaySchedule,
                        build_day_schedule, compare_solvers,
                        flight_count_agreement)


__credits__ = "evacflight development team"

__all__ = ['AIRPORT_KEY', 'DATE_KEY', 'HOUR_KEY', 'CLASS_KEY', 'COUNT_KEY',
           'ORIGIN_KEY', 'DEST_KEY', 'DURATION_KEY', 'DEST_ID_KEY',
           'N_DESTINATIONS', 'FEATURE_KEYS', 'EVAC_CAPABILITY_KEY',
           'LABEL_KEYS', 'DATASET_COLUMNS', 'is_valid_airport_id',
           'ingest_operations', 'ingest_flight_history',
           'compute_hourly_capability', 'top_destinations',
           'build_candidate_table', 'CandidateTable', 'SchemaError',
           'RowError', 'EmptyHistoryError', 'InsufficientDestinationsError',
           'SyntheticConfig', 'generate_synthetic_history',
           'write_synthetic_history', 'FitnessWeights', 'DEFAULT_WEIGHTS',
           'fitness', 'score_population', 'popcount', 'weights_from_settings',
           'solve_exhaustive', 'GaConfig', 'init_population', 'select_parent',
           'crossover', 'mutate', 'run_ga', 'MlpModel', 'synthesize_dataset',
           'train', 'predict', 'sample_individuals', 'evaluate',
           'DivergenceError', 'EmptyDatasetError', 'HybridConfig',
           'inject_random', 'inject_worst', 'run_hybrid', 'HistoryData',
           'SolverSpec', 'HourlySchedule', 'DaySchedule',
           'build_day_schedule', 'compare_solvers', 'flight_count_agreement']

__version__ = '0.1.0'
