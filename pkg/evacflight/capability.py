import warnings
from math import floor

import numpy as np
import pandas as pd

from evacflight.ef_strings import AIRPORT_KEY, DATE_KEY, HOUR_KEY, \
    CLASS_KEY, COUNT_KEY, OPERATIONS_COLUMNS, OPERATION_CLASSES, \
    CAPABILITY_CLASSES, ORIGIN_KEY, DEST_KEY, DURATION_KEY, HISTORY_COLUMNS, \
    CAP_MEAN_KEY, CAP_STD_KEY, N_DAYS_KEY, DEST_ID_KEY, POPULARITY_RAW_KEY, \
    POPULARITY_KEY, P_RAW_KEY, C_RAW_KEY, S_RAW_KEY, ARRIVAL_HOUR_KEY, \
    N_DESTINATIONS, is_valid_airport_id
from evacflight.util import check_fp, drop_unnamed_nan_columns

HOURS_PER_DAY = 24
_ISO_DATE_FORMAT = '%Y-%m-%d'

# value a normalized column takes when all ten raw values are equal
CONSTANT_COLUMN_VALUE = 0.5

CANDIDATE_COLUMNS = [DEST_ID_KEY, ARRIVAL_HOUR_KEY, P_RAW_KEY, C_RAW_KEY,
                     S_RAW_KEY, N_DAYS_KEY, POPULARITY_KEY, CAP_MEAN_KEY,
                     CAP_STD_KEY]


class SchemaError(ValueError):
    pass


class RowError(ValueError):
    pass


class EmptyHistoryError(ValueError):
    pass


class InsufficientDestinationsError(ValueError):
    pass


def _read_delimited(source, required_cols):
    if isinstance(source, str):
        check_fp(source)

    # everything comes in as text so each cell can be validated and reported
    # against its row instead of failing inside the parser
    df = pd.read_csv(source, sep=',', dtype=str, keep_default_na=False,
                     encoding='utf-8')
    df = drop_unnamed_nan_columns(df)
    df.columns = [c.strip() for c in df.columns]

    missing = [c for c in required_cols if c not in df.columns]
    if missing:
        name = source if isinstance(source, str) else 'input'
        raise SchemaError(f"File '{name}' is missing required columns "
                          f"{missing}; expected {list(required_cols)}")

    df = df[list(required_cols)].copy()
    for col in required_cols:
        df[col] = df[col].str.strip()
    return df


def _row_numbers(mask):
    # +2: one for the header line, one because file lines are 1-based
    return [int(i) + 2 for i in np.flatnonzero(np.asarray(mask))]


def _check_airports(df, col, errs):
    bad = ~df[col].map(is_valid_airport_id)
    for row, value in zip(_row_numbers(bad), df.loc[bad, col]):
        errs.append((row, f"{col} '{value}' is not a 3- or 4-character "
                          f"airport identifier"))


def _parse_dates(df, errs):
    dates = pd.to_datetime(df[DATE_KEY], format=_ISO_DATE_FORMAT,
                           errors='coerce')
    bad = dates.isna()
    for row, value in zip(_row_numbers(bad), df.loc[bad, DATE_KEY]):
        errs.append((row, f"date '{value}' is not an ISO-8601 date "
                          f"(YYYY-MM-DD)"))
    return dates.dt.strftime(_ISO_DATE_FORMAT)


def _parse_integers(df, col, low, high, errs):
    numbers = pd.to_numeric(df[col], errors='coerce')
    not_int = numbers.isna() | (numbers != np.floor(numbers))
    for row, value in zip(_row_numbers(not_int), df.loc[not_int, col]):
        errs.append((row, f"{col} '{value}' is not an integer"))

    out_of_range = ~not_int & (numbers < low)
    if high is not None:
        out_of_range |= ~not_int & (numbers > high)
    expected = f"outside {low}-{high}" if high is not None else \
        f"below {low}"
    for row, value in zip(_row_numbers(out_of_range),
                          df.loc[out_of_range, col]):
        errs.append((row, f"{col} {value} {expected}"))
    return numbers


def _raise_row_errors(errs, source):
    if len(errs) > 0:
        name = source if isinstance(source, str) else 'input'
        lines = [f"row {row}: {msg}" for row, msg in sorted(errs)]
        raise RowError(f"File '{name}' has {len(errs)} invalid value(s):\n" +
                       '\n'.join(lines))


def ingest_operations(source):
    """Read and validate an hourly operations file.

    Parameters
    ----------
    source: str or file-like
        Comma-delimited UTF-8 text with the header
        ``airport,date,hour,class,count``.

    Returns
    -------
    pd.DataFrame
        One row per (airport, date, hour, class) cell, with ``hour`` and
        ``count`` as integers and ``date`` as an ISO string.

    Raises
    ------
    ValueError
        If source is a path that doesn't exist.
    SchemaError
        If a required column is missing.
    RowError
        If any row is malformed: bad airport, date, hour outside 0-23,
        unknown class, negative or non-integer count, or a repeated cell.
        Every offending row is listed with its line number.
    """
    df = _read_delimited(source, OPERATIONS_COLUMNS)

    errs = []
    _check_airports(df, AIRPORT_KEY, errs)
    dates = _parse_dates(df, errs)
    hours = _parse_integers(df, HOUR_KEY, 0, HOURS_PER_DAY - 1, errs)
    counts = _parse_integers(df, COUNT_KEY, 0, None, errs)

    bad_class = ~df[CLASS_KEY].isin(OPERATION_CLASSES)
    for row, value in zip(_row_numbers(bad_class), df.loc[bad_class,
                                                          CLASS_KEY]):
        errs.append((row, f"class '{value}' is not one of "
                          f"{', '.join(OPERATION_CLASSES)}"))

    dupes = df.duplicated(subset=[AIRPORT_KEY, DATE_KEY, HOUR_KEY, CLASS_KEY])
    for row in _row_numbers(dupes):
        errs.append((row, "repeats an earlier (airport, date, hour, class) "
                          "cell"))

    _raise_row_errors(errs, source)

    df[DATE_KEY] = dates
    df[HOUR_KEY] = hours.astype(int)
    df[COUNT_KEY] = counts.astype(int)
    return df.reset_index(drop=True)


def ingest_flight_history(source):
    """Read and validate a flight-history file.

    Parameters
    ----------
    source: str or file-like
        Comma-delimited UTF-8 text with the header
        ``origin,dest,date,duration_hours``; one row per historical flight.

    Returns
    -------
    pd.DataFrame
        The validated flights, ``duration_hours`` as float.

    Raises
    ------
    SchemaError
        If a required column is missing.
    RowError
        If any row has a bad airport, a bad date, or a non-positive duration.
    """
    df = _read_delimited(source, HISTORY_COLUMNS)

    errs = []
    _check_airports(df, ORIGIN_KEY, errs)
    _check_airports(df, DEST_KEY, errs)
    dates = _parse_dates(df, errs)

    durations = pd.to_numeric(df[DURATION_KEY], errors='coerce')
    bad = durations.isna() | ~(durations > 0) | ~np.isfinite(durations)
    for row, value in zip(_row_numbers(bad), df.loc[bad, DURATION_KEY]):
        errs.append((row, f"{DURATION_KEY} '{value}' is not a positive "
                          f"number"))

    _raise_row_errors(errs, source)

    df[DATE_KEY] = dates
    df[DURATION_KEY] = durations.astype(float)
    return df.reset_index(drop=True)


def compute_hourly_capability(records, airport):
    """Mean and spread of non-commercial operations per hour of day.

    For every hour h, the daily sums of GAV and MIL counts at h are taken over
    every day on which the airport reported anything; a missing cell counts
    as zero operations.  ``c`` is their mean and ``s`` their population
    standard deviation.

    Parameters
    ----------
    records: pd.DataFrame
        Output of ingest_operations.
    airport: str
        Airport to profile.

    Returns
    -------
    pd.DataFrame
        24 rows (hours 0-23) with columns airport, hour, c, s, n_days.

    Raises
    ------
    EmptyHistoryError
        If the airport has no GAV or MIL records at all.
    """
    airport_df = records.loc[records[AIRPORT_KEY] == airport]
    cap_df = airport_df.loc[airport_df[CLASS_KEY].isin(CAPABILITY_CLASSES)]
    if cap_df.empty:
        raise EmptyHistoryError(
            f"Airport '{airport}' has no {' or '.join(CAPABILITY_CLASSES)} "
            f"records to compute a capability from")

    days = sorted(airport_df[DATE_KEY].unique())
    daily = cap_df.groupby([DATE_KEY, HOUR_KEY])[COUNT_KEY].sum()
    grid = daily.unstack(HOUR_KEY).reindex(
        index=days, columns=range(HOURS_PER_DAY)).fillna(0).astype(float)

    n_days = len(days)
    result = pd.DataFrame({
        AIRPORT_KEY: airport,
        HOUR_KEY: range(HOURS_PER_DAY),
        CAP_MEAN_KEY: grid.mean(axis=0).to_numpy(),
        CAP_STD_KEY: grid.std(axis=0, ddof=0).to_numpy(),
        N_DAYS_KEY: n_days})

    if n_days < 2:
        warnings.warn(f"Capability of '{airport}' rests on a single day; "
                      f"every deviation is zero")
    if (result[CAP_MEAN_KEY] == 0).all():
        warnings.warn(f"Airport '{airport}' has zero non-commercial "
                      f"capability at every hour")

    return result


def top_destinations(flight_history, evac_airport):
    """The ten most flown destinations from an airport.

    Parameters
    ----------
    flight_history: str, file-like or pd.DataFrame
        A flight-history file, or the output of ingest_flight_history.
    evac_airport: str
        The origin airport.

    Returns
    -------
    pd.DataFrame
        Exactly 10 rows with columns dest_id, popularity_raw (flight count)
        and duration_hours (median observed duration), ordered by descending
        popularity then by identifier.

    Raises
    ------
    InsufficientDestinationsError
        If fewer than ten distinct destinations are served.
    """
    if not isinstance(flight_history, pd.DataFrame):
        flight_history = ingest_flight_history(flight_history)

    flights = flight_history.loc[flight_history[ORIGIN_KEY] == evac_airport]
    grouped = flights.groupby(DEST_KEY)[DURATION_KEY]
    dests = pd.DataFrame({
        POPULARITY_RAW_KEY: grouped.size(),
        DURATION_KEY: grouped.median()})
    dests.index.name = DEST_ID_KEY
    dests = dests.reset_index()

    if len(dests) < N_DESTINATIONS:
        raise InsufficientDestinationsError(
            f"Airport '{evac_airport}' has {len(dests)} distinct destinations "
            f"in the flight history; {N_DESTINATIONS} are required")

    # mergesort is stable, so the identifier order survives equal counts
    dests = dests.sort_values([POPULARITY_RAW_KEY, DEST_ID_KEY],
                              ascending=[False, True], kind='mergesort')
    dests = dests.head(N_DESTINATIONS).reset_index(drop=True)
    dests[POPULARITY_RAW_KEY] = dests[POPULARITY_RAW_KEY].astype(int)
    return dests


def arrival_hour(depart_hour, duration_hours):
    """Hour of day a flight lands, rounding the duration half-up"""
    return (depart_hour + int(floor(duration_hours + 0.5))) % HOURS_PER_DAY


def min_max_normalize(values):
    """Scale values onto [0, 1]; a constant column maps to 0.5"""
    values = np.asarray(values, dtype=float)
    low, high = values.min(), values.max()
    if high == low:
        return np.full(values.shape, CONSTANT_COLUMN_VALUE)
    return (values - low) / (high - low)


class CandidateTable(object):
    """The ten destination choices of one evacuating airport at one hour.

    Attributes
    ----------
    evac_airport: str
        The evacuating (origin) airport.
    depart_hour: int
        Departure hour of day, 0-23.
    capability: float
        The evacuating airport's mean capability ``C`` at depart_hour.
    rows: pd.DataFrame
        Exactly ten rows in the fixed top-ten order; bit i of a selection
        always refers to rows.iloc[i].  Columns are CANDIDATE_COLUMNS; p, c
        and s are normalized to [0, 1].
    """
    def __init__(self, evac_airport, depart_hour, capability, rows):
        if len(rows) != N_DESTINATIONS:
            raise ValueError(f"A candidate table needs exactly "
                             f"{N_DESTINATIONS} rows, got {len(rows)}")
        if not 0 <= depart_hour < HOURS_PER_DAY:
            raise ValueError(f"depart_hour {depart_hour} outside 0-23")
        if not capability >= 0:
            raise ValueError(f"capability must be non-negative, got "
                             f"{capability}")

        missing = [c for c in CANDIDATE_COLUMNS if c not in rows.columns]
        if missing:
            raise ValueError(f"Candidate rows are missing columns {missing}")

        for col in (POPULARITY_KEY, CAP_MEAN_KEY, CAP_STD_KEY):
            vals = rows[col].to_numpy(dtype=float)
            if not ((vals >= 0) & (vals <= 1)).all():
                raise ValueError(f"Normalized column '{col}' must lie in "
                                 f"[0, 1]")

        self.evac_airport = evac_airport
        self.depart_hour = int(depart_hour)
        self.capability = float(capability)
        self.rows = rows[CANDIDATE_COLUMNS].reset_index(drop=True).copy()

        self._p = self._frozen(POPULARITY_KEY)
        self._c = self._frozen(CAP_MEAN_KEY)
        self._s = self._frozen(CAP_STD_KEY)

    def _frozen(self, col):
        arr = self.rows[col].to_numpy(dtype=float).copy()
        arr.flags.writeable = False
        return arr

    @property
    def p(self):
        return self._p

    @property
    def c(self):
        return self._c

    @property
    def s(self):
        return self._s

    @property
    def dest_ids(self):
        return self.rows[DEST_ID_KEY].tolist()

    def features(self):
        """The 31-value encoding: (p1, c1, s1, ..., p10, c10, s10, C)"""
        interleaved = np.column_stack([self._p, self._c, self._s]).ravel()
        return np.append(interleaved, self.capability)

    @classmethod
    def from_features(cls, features, evac_airport=None, depart_hour=0,
                      dest_ids=None):
        """Rebuild a table from its 31-value encoding.

        Raw values are not part of the encoding and come back as NaN.
        """
        features = np.asarray(features, dtype=float)
        if features.shape != (3 * N_DESTINATIONS + 1,):
            raise ValueError(f"Expected {3 * N_DESTINATIONS + 1} features, "
                             f"got shape {features.shape}")

        if dest_ids is None:
            dest_ids = [f"D{i}" for i in range(1, N_DESTINATIONS + 1)]

        triples = features[:-1].reshape(N_DESTINATIONS, 3)
        rows = pd.DataFrame({
            DEST_ID_KEY: list(dest_ids),
            ARRIVAL_HOUR_KEY: np.nan,
            P_RAW_KEY: np.nan,
            C_RAW_KEY: np.nan,
            S_RAW_KEY: np.nan,
            N_DAYS_KEY: np.nan,
            POPULARITY_KEY: triples[:, 0],
            CAP_MEAN_KEY: triples[:, 1],
            CAP_STD_KEY: triples[:, 2]})
        return cls(evac_airport, depart_hour, features[-1], rows)

    def __repr__(self):
        return (f"CandidateTable(evac_airport={self.evac_airport!r}, "
                f"depart_hour={self.depart_hour}, "
                f"capability={self.capability:.3f})")


def _by_hour(caps):
    return caps.set_index(HOUR_KEY)


def build_candidate_table(evac_caps, dest_caps, dests, depart_hour):
    """Assemble the candidate table of one departure hour.

    Parameters
    ----------
    evac_caps: pd.DataFrame
        24-row capability profile of the evacuating airport.
    dest_caps: dict of str -> pd.DataFrame
        24-row capability profile per destination.
    dests: pd.DataFrame
        Output of top_destinations.
    depart_hour: int
        Departure hour, 0-23.

    Returns
    -------
    CandidateTable
        Destination i is looked up at its arrival hour
        ``(depart_hour + round(duration)) mod 24``; p, c and s are min-max
        normalized across the ten rows.

    Raises
    ------
    ValueError
        If a destination has no capability profile.
    """
    missing = [d for d in dests[DEST_ID_KEY] if d not in dest_caps]
    if missing:
        raise ValueError(f"No capability profile for destination(s) "
                         f"{', '.join(missing)}")

    evac_airport = evac_caps[AIRPORT_KEY].iloc[0]
    capability = _by_hour(evac_caps).loc[depart_hour, CAP_MEAN_KEY]

    records = []
    for _, dest in dests.iterrows():
        arrival = arrival_hour(depart_hour, dest[DURATION_KEY])
        at_arrival = _by_hour(dest_caps[dest[DEST_ID_KEY]]).loc[arrival]
        records.append({
            DEST_ID_KEY: dest[DEST_ID_KEY],
            ARRIVAL_HOUR_KEY: arrival,
            P_RAW_KEY: float(dest[POPULARITY_RAW_KEY]),
            C_RAW_KEY: float(at_arrival[CAP_MEAN_KEY]),
            S_RAW_KEY: float(at_arrival[CAP_STD_KEY]),
            N_DAYS_KEY: int(at_arrival[N_DAYS_KEY])})

    rows = pd.DataFrame(records)
    rows[POPULARITY_KEY] = min_max_normalize(rows[P_RAW_KEY])
    rows[CAP_MEAN_KEY] = min_max_normalize(rows[C_RAW_KEY])
    rows[CAP_STD_KEY] = min_max_normalize(rows[S_RAW_KEY])

    return CandidateTable(evac_airport, depart_hour, capability, rows)
