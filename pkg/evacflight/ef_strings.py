# Column names and other literal strings shared across modules.  Keeping them
# in one place means the CSV schemas written by one step and read by another
# can't drift apart.  Strings that belong to a single module live there.

import re

# operations file (hourly operation counts per airport and class)
AIRPORT_KEY = "airport"
DATE_KEY = "date"
HOUR_KEY = "hour"
CLASS_KEY = "class"
COUNT_KEY = "count"
OPERATIONS_COLUMNS = (AIRPORT_KEY, DATE_KEY, HOUR_KEY, CLASS_KEY, COUNT_KEY)

# aircraft categories; only the non-commercial ones feed the capability
AIR_CARRIER = "AC"
AIR_TAXI = "AT"
GENERAL_AVIATION = "GAV"
MILITARY = "MIL"
OPERATION_CLASSES = (AIR_CARRIER, AIR_TAXI, GENERAL_AVIATION, MILITARY)
CAPABILITY_CLASSES = (GENERAL_AVIATION, MILITARY)

# flight-history file (one row per historical flight)
ORIGIN_KEY = "origin"
DEST_KEY = "dest"
DURATION_KEY = "duration_hours"
HISTORY_COLUMNS = (ORIGIN_KEY, DEST_KEY, DATE_KEY, DURATION_KEY)

# hourly capability profile
CAP_MEAN_KEY = "c"
CAP_STD_KEY = "s"
N_DAYS_KEY = "n_days"

# destination info and candidate-table rows
DEST_ID_KEY = "dest_id"
POPULARITY_RAW_KEY = "popularity_raw"
POPULARITY_KEY = "p"
P_RAW_KEY = "p_raw"
C_RAW_KEY = "c_raw"
S_RAW_KEY = "s_raw"
ARRIVAL_HOUR_KEY = "arrival_hour"

# network dataset layout: A1..A30 are (p, c, s) per destination, C is the
# evacuating airport's capability, S1..S10 the oracle-best selection bits
N_DESTINATIONS = 10
FEATURE_KEYS = tuple(f"A{i}" for i in range(1, 3 * N_DESTINATIONS + 1))
EVAC_CAPABILITY_KEY = "C"
LABEL_KEYS = tuple(f"S{i}" for i in range(1, N_DESTINATIONS + 1))
DATASET_COLUMNS = FEATURE_KEYS + (EVAC_CAPABILITY_KEY,) + LABEL_KEYS

# GA / hybrid trace
GENERATION_KEY = "generation"
BEST_KEY = "best"
MEAN_KEY = "mean"
BEST_SO_FAR_KEY = "best_so_far"
SOURCE_KEY = "source"
TRACE_COLUMNS = (GENERATION_KEY, BEST_KEY, MEAN_KEY, BEST_SO_FAR_KEY)

# schedules and comparison reports
N_FLIGHTS_KEY = "n_flights"
FITNESS_KEY = "fitness"
SELECTION_KEY = "selection"
DESTINATIONS_KEY = "destinations"
SOLVER_KEY = "solver"
CONFIG_LABEL_KEY = "config"
SEED_KEY = "seed"
HAMMING_KEY = "hamming"
ORACLE_FITNESS_KEY = "oracle_fitness"
SCHEDULE_CSV_COLUMNS = (HOUR_KEY, N_FLIGHTS_KEY, FITNESS_KEY, SELECTION_KEY,
                        DESTINATIONS_KEY)

# destinations inside a CSV cell are joined with this
DESTINATION_DELIMITER = ";"

ORACLE_SOLVER = "oracle"
GA_SOLVER = "ga"
HYBRID_SOLVER = "hybrid"
SOLVER_NAMES = (ORACLE_SOLVER, GA_SOLVER, HYBRID_SOLVER)

RANDOM_REPLACE = "random"
WORST_REPLACE = "worst"
APPROACH_NAMES = (RANDOM_REPLACE, WORST_REPLACE)

_AIRPORT_ID_PATTERN = re.compile(r"^[A-Z0-9]{3,4}$")


def is_valid_airport_id(airport_id):
    """True for 3- or 4-character upper-case location identifiers (DAB, KDAB)
    """
    if not isinstance(airport_id, str):
        return False
    return _AIRPORT_ID_PATTERN.match(airport_id) is not None
