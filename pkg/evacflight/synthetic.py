import os
from datetime import date, timedelta

import numpy as np
import pandas as pd
from scipy.stats import poisson

from evacflight.ef_strings import AIRPORT_KEY, DATE_KEY, HOUR_KEY, \
    CLASS_KEY, COUNT_KEY, OPERATION_CLASSES, ORIGIN_KEY, DEST_KEY, \
    DURATION_KEY, is_valid_airport_id
from evacflight.settings import get_section, SYNTHETIC_SECTION
from evacflight.util import write_frame

OPERATIONS_FNAME = 'operations.csv'
FLIGHT_HISTORY_FNAME = 'flight_history.csv'

_HOURS = 24
_MIN_DURATION_HOURS = 0.25


class SyntheticConfig(object):
    """Parameters of the synthetic operations and flight-history generator.

    Attributes
    ----------
    origins: tuple of str
        Airports whose outbound flights make up the flight history.
    destinations: tuple of str
        Airports the origins fly to (origins also fly to each other).
    days: int
        Length of the history window.
    start_date: datetime.date
        First day of the window.
    hourly_profile: np.ndarray
        24 non-negative multipliers of the peak-hour rate.
    class_rates: dict of str -> float
        Peak-hour mean operations per class at an airport of scale 1.0;
        classes not listed have rate zero.
    airport_scales: dict of str -> float
        Per-airport multiplier of all class rates; missing airports use 1.0.
    daily_flights_range: (float, float)
        Range of the mean daily flight count of an origin-destination pair.
    duration_range_hours: (float, float)
        Range of the typical flight time of an origin-destination pair.
    duration_jitter_hours: float
        Standard deviation of a single flight's time around the typical one.
    """
    def __init__(self, origins, destinations, days, start_date,
                 hourly_profile, class_rates, airport_scales=None,
                 daily_flights_range=(0.5, 6.0),
                 duration_range_hours=(1.0, 4.5),
                 duration_jitter_hours=0.15):
        self.origins = tuple(origins)
        self.destinations = tuple(destinations)
        self.days = int(days)
        if isinstance(start_date, str):
            start_date = date.fromisoformat(start_date)
        self.start_date = start_date
        self.hourly_profile = np.asarray(hourly_profile, dtype=float)
        self.class_rates = dict(class_rates)
        self.airport_scales = dict(airport_scales or {})
        self.daily_flights_range = tuple(float(x) for x in
                                         daily_flights_range)
        self.duration_range_hours = tuple(float(x) for x in
                                          duration_range_hours)
        self.duration_jitter_hours = float(duration_jitter_hours)
        self._validate()

    @classmethod
    def from_settings(cls, section=None):
        """Build from a 'synthetic' settings section (packaged by default)"""
        if section is None:
            section = get_section(SYNTHETIC_SECTION)
        return cls(origins=section['origins'],
                   destinations=section['destinations'],
                   days=section['days'],
                   start_date=section['start_date'],
                   hourly_profile=section['hourly_profile'],
                   class_rates=section['class_rates'],
                   airport_scales=section.get('airport_scales'),
                   daily_flights_range=section['daily_flights_range'],
                   duration_range_hours=section['duration_range_hours'],
                   duration_jitter_hours=section['duration_jitter_hours'])

    @property
    def airports(self):
        # origins first, then destinations that aren't also origins
        return self.origins + tuple(d for d in self.destinations
                                    if d not in self.origins)

    def _validate(self):
        errs = []
        airports = self.airports
        if len(airports) < 2:
            errs.append("at least 2 airports are required")
        if len(self.origins) == 0:
            errs.append("at least 1 origin is required")
        if len(set(self.origins)) != len(self.origins) or \
                len(set(self.destinations)) != len(self.destinations):
            errs.append("airports must not repeat")
        bad_ids = [a for a in airports if not is_valid_airport_id(a)]
        if bad_ids:
            errs.append(f"invalid airport identifiers: {', '.join(bad_ids)}")
        if self.days < 2:
            errs.append(f"at least 2 days are required, got {self.days}")
        if self.hourly_profile.shape != (_HOURS,):
            errs.append(f"hourly_profile needs {_HOURS} values, got "
                        f"{self.hourly_profile.size}")
        elif (self.hourly_profile < 0).any():
            errs.append("hourly_profile values must be non-negative")
        unknown = sorted(set(self.class_rates) - set(OPERATION_CLASSES))
        if unknown:
            errs.append(f"unknown operation classes: {', '.join(unknown)}")
        if any(r < 0 for r in self.class_rates.values()):
            errs.append("class_rates must be non-negative")
        if any(s < 0 for s in self.airport_scales.values()):
            errs.append("airport_scales must be non-negative")
        for name, (low, high) in (
                ('daily_flights_range', self.daily_flights_range),
                ('duration_range_hours', self.duration_range_hours)):
            if not 0 <= low <= high:
                errs.append(f"{name} must satisfy 0 <= low <= high")
        if self.duration_range_hours[0] <= 0:
            errs.append("duration_range_hours must be positive")
        if self.duration_jitter_hours < 0:
            errs.append("duration_jitter_hours must be non-negative")

        if errs:
            raise ValueError("Invalid synthetic config: " + '; '.join(errs))

    def dates(self):
        return [(self.start_date + timedelta(days=i)).isoformat()
                for i in range(self.days)]


def _generate_operations(config, rng):
    airports = list(config.airports)
    scales = np.array([config.airport_scales.get(a, 1.0) for a in airports])
    class_rates = np.array([config.class_rates.get(k, 0.0)
                            for k in OPERATION_CLASSES])

    # rate[airport, hour, class]; every day shares the same curve
    rates = (scales[:, None, None] * config.hourly_profile[None, :, None] *
             class_rates[None, None, :])
    rates = np.broadcast_to(rates[:, None, :, :],
                            (len(airports), config.days, _HOURS,
                             len(OPERATION_CLASSES)))
    counts = poisson.rvs(rates, random_state=rng)

    index = pd.MultiIndex.from_product(
        [airports, config.dates(), range(_HOURS), OPERATION_CLASSES],
        names=[AIRPORT_KEY, DATE_KEY, HOUR_KEY, CLASS_KEY])
    ops = index.to_frame(index=False)
    ops[COUNT_KEY] = np.asarray(counts, dtype=int).ravel()
    return ops


def _generate_history(config, rng):
    pairs = [(o, d) for o in config.origins for d in config.airports
             if d != o]
    n_pairs = len(pairs)

    low, high = config.daily_flights_range
    daily_means = rng.uniform(low, high, size=n_pairs)
    low, high = config.duration_range_hours
    typical = rng.uniform(low, high, size=n_pairs)

    # flights[pair, day]
    flights = poisson.rvs(np.broadcast_to(daily_means[:, None],
                                          (n_pairs, config.days)),
                          random_state=rng)
    flights = np.asarray(flights, dtype=int)

    pair_idx, day_idx = np.nonzero(flights)
    repeats = flights[pair_idx, day_idx]
    pair_idx = np.repeat(pair_idx, repeats)
    day_idx = np.repeat(day_idx, repeats)

    jitter = rng.normal(0.0, config.duration_jitter_hours,
                        size=pair_idx.size)
    durations = np.maximum(typical[pair_idx] + jitter, _MIN_DURATION_HOURS)

    dates = np.array(config.dates())
    history = pd.DataFrame({
        ORIGIN_KEY: [pairs[i][0] for i in pair_idx],
        DEST_KEY: [pairs[i][1] for i in pair_idx],
        DATE_KEY: dates[day_idx],
        DURATION_KEY: np.round(durations, 2)})

    history = history.sort_values([DATE_KEY, ORIGIN_KEY, DEST_KEY],
                                  kind='mergesort')
    return history.reset_index(drop=True)


def generate_synthetic_history(config, seed):
    """Draw plausible operations counts and flight history.

    Operation counts are Poisson around ``scale * profile[hour] *
    class_rate``; each origin flies to every other configured airport with a
    pair-specific daily mean and typical duration, so the top-ten list of
    each origin is fixed by the seed.

    Parameters
    ----------
    config: SyntheticConfig
        Generator parameters.
    seed: int
        Seed of the generator; identical (config, seed) give identical frames.

    Returns
    -------
    (pd.DataFrame, pd.DataFrame)
        The operations records (one row per airport, date, hour and class)
        and the flight history (one row per flight).
    """
    rng = np.random.default_rng(seed)
    ops = _generate_operations(config, rng)
    history = _generate_history(config, rng)
    return ops, history


def write_synthetic_history(config, seed, output_dir):
    """Generate and write operations.csv and flight_history.csv.

    Returns
    -------
    (str, str)
        Paths of the operations and flight-history files.
    """
    ops, history = generate_synthetic_history(config, seed)
    os.makedirs(output_dir, exist_ok=True)

    ops_fp = os.path.join(output_dir, OPERATIONS_FNAME)
    history_fp = os.path.join(output_dir, FLIGHT_HISTORY_FNAME)
    write_frame(ops, ops_fp)
    write_frame(history, history_fp)
    return ops_fp, history_fp
