import io
import os
from unittest import TestCase, main

import numpy as np
import numpy.testing as npt
import pandas as pd
from pandas.testing import assert_frame_equal

from evacflight.capability import ingest_operations, ingest_flight_history, \
    compute_hourly_capability, top_destinations, arrival_hour, \
    min_max_normalize, build_candidate_table, CandidateTable, SchemaError, \
    RowError, EmptyHistoryError, InsufficientDestinationsError
from evacflight.ef_strings import AIRPORT_KEY, HOUR_KEY, CAP_MEAN_KEY, \
    CAP_STD_KEY, N_DAYS_KEY, DEST_ID_KEY, POPULARITY_RAW_KEY, DURATION_KEY, \
    CAPABILITY_CLASSES, CLASS_KEY, DATE_KEY, COUNT_KEY


class IngestTests(TestCase):
    def setUp(self):
        self.data_dir = os.path.join(os.path.dirname(__file__), 'data')
        self.ops_fp = os.path.join(self.data_dir, 'operations_fixture.csv')
        self.history_fp = os.path.join(self.data_dir,
                                       'flight_history_fixture.csv')

    def test_ingest_operations(self):
        obs = ingest_operations(self.ops_fp)
        self.assertEqual(len(obs), 10)
        self.assertEqual(list(obs.columns),
                         ['airport', 'date', 'hour', 'class', 'count'])
        self.assertTrue(pd.api.types.is_integer_dtype(obs[HOUR_KEY]))
        self.assertTrue(pd.api.types.is_integer_dtype(obs[COUNT_KEY]))
        self.assertEqual(obs.loc[3, DATE_KEY], '2023-01-02')
        self.assertEqual(obs[COUNT_KEY].sum(), 76)

    def test_ingest_operations_single_row(self):
        source = io.StringIO("airport,date,hour,class,count\n"
                             "DAB,2023-01-05,14,GAV,7\n")
        obs = ingest_operations(source)
        exp = pd.DataFrame({'airport': ['DAB'], 'date': ['2023-01-05'],
                            'hour': [14], 'class': ['GAV'], 'count': [7]})
        assert_frame_equal(obs, exp, check_dtype=False)

    def test_ingest_operations_row_errors(self):
        fp = os.path.join(self.data_dir, 'operations_malformed.csv')
        with self.assertRaises(RowError) as ctx:
            ingest_operations(fp)

        msg = str(ctx.exception)
        self.assertIn("6 invalid value(s)", msg)
        self.assertIn("row 3: hour 24 outside 0-23", msg)
        self.assertIn("row 4: airport 'dab' is not a 3- or 4-character "
                      "airport identifier", msg)
        self.assertIn("row 5: date '2023-13-01' is not an ISO-8601 date",
                      msg)
        self.assertIn("row 6: class 'HEL' is not one of AC, AT, GAV, MIL",
                      msg)
        self.assertIn("row 7: count -2 below 0", msg)
        self.assertIn("row 8: repeats an earlier", msg)
        self.assertNotIn("row 2:", msg)

    def test_ingest_operations_missing_column(self):
        fp = os.path.join(self.data_dir, 'operations_missing_column.csv')
        with self.assertRaisesRegex(SchemaError, "missing required columns "
                                                 r"\['class'\]"):
            ingest_operations(fp)

    def test_ingest_operations_missing_file(self):
        fp = os.path.join(self.data_dir, 'not_there.csv')
        with self.assertRaisesRegex(ValueError, "Problem! .*not_there.csv is "
                                                "not a path to a valid file"):
            ingest_operations(fp)

    def test_ingest_flight_history(self):
        obs = ingest_flight_history(self.history_fp)
        self.assertEqual(len(obs), 23)
        self.assertEqual(obs[DURATION_KEY].dtype, float)

    def test_ingest_flight_history_bad_duration(self):
        source = io.StringIO("origin,dest,date,duration_hours\n"
                             "DAB,ATL,2023-01-01,2.0\n"
                             "DAB,ATL,2023-01-02,0\n"
                             "DAB,BOS,2023-01-02,abc\n")
        with self.assertRaises(RowError) as ctx:
            ingest_flight_history(source)
        msg = str(ctx.exception)
        self.assertIn("row 3: duration_hours '0' is not a positive number",
                      msg)
        self.assertIn("row 4: duration_hours 'abc'", msg)


class CapabilityTests(TestCase):
    def setUp(self):
        data_dir = os.path.join(os.path.dirname(__file__), 'data')
        self.records = ingest_operations(
            os.path.join(data_dir, 'operations_fixture.csv'))

    def test_compute_hourly_capability(self):
        obs = compute_hourly_capability(self.records, 'DAB')
        self.assertEqual(len(obs), 24)
        self.assertEqual(obs[HOUR_KEY].tolist(), list(range(24)))
        self.assertTrue((obs[AIRPORT_KEY] == 'DAB').all())
        self.assertTrue((obs[N_DAYS_KEY] == 2).all())

        # hour 0: sums {3, 4}; hour 1: {0, 2}; hour 9 only has AT
        by_hour = obs.set_index(HOUR_KEY)
        self.assertAlmostEqual(by_hour.loc[0, CAP_MEAN_KEY], 3.5)
        self.assertAlmostEqual(by_hour.loc[0, CAP_STD_KEY], 0.5)
        self.assertAlmostEqual(by_hour.loc[1, CAP_MEAN_KEY], 1.0)
        self.assertAlmostEqual(by_hour.loc[1, CAP_STD_KEY], 1.0)
        self.assertEqual(by_hour.loc[9, CAP_MEAN_KEY], 0.0)
        self.assertEqual(by_hour.loc[9, CAP_STD_KEY], 0.0)

    def test_compute_hourly_capability_two_days(self):
        records = pd.DataFrame({
            AIRPORT_KEY: ['ATL'] * 3,
            DATE_KEY: ['2023-01-01', '2023-01-02', '2023-01-02'],
            HOUR_KEY: [9, 9, 9],
            CLASS_KEY: ['GAV', 'GAV', 'MIL'],
            COUNT_KEY: [4, 5, 1]})
        obs = compute_hourly_capability(records, 'ATL').set_index(HOUR_KEY)
        self.assertEqual(obs.loc[9, CAP_MEAN_KEY], 5.0)
        self.assertEqual(obs.loc[9, CAP_STD_KEY], 1.0)

    def test_compute_hourly_capability_single_day(self):
        with self.assertWarnsRegex(UserWarning, "rests on a single day"):
            obs = compute_hourly_capability(self.records, 'ATL')
        obs = obs.set_index(HOUR_KEY)
        self.assertEqual(obs.loc[5, CAP_MEAN_KEY], 7.0)
        self.assertTrue((obs[CAP_STD_KEY] == 0).all())

    def test_compute_hourly_capability_all_zero(self):
        records = pd.DataFrame({
            AIRPORT_KEY: ['TLH', 'TLH'],
            DATE_KEY: ['2023-01-01', '2023-01-02'],
            HOUR_KEY: [3, 4],
            CLASS_KEY: ['GAV', 'MIL'],
            COUNT_KEY: [0, 0]})
        with self.assertWarnsRegex(UserWarning, "zero non-commercial"):
            obs = compute_hourly_capability(records, 'TLH')
        self.assertTrue((obs[CAP_MEAN_KEY] == 0).all())
        self.assertTrue((obs[CAP_STD_KEY] == 0).all())

    def test_compute_hourly_capability_no_capability_records(self):
        with self.assertRaisesRegex(EmptyHistoryError,
                                    "'JAX' has no GAV or MIL records"):
            compute_hourly_capability(self.records, 'JAX')

    def test_compute_hourly_capability_brute_force(self):
        rng = np.random.default_rng(3)
        dates = [f'2023-02-{d:02d}' for d in range(1, 8)]
        rows = []
        for date in dates:
            for hour in range(24):
                for cls in ('AC', 'GAV', 'MIL'):
                    # leave some cells out entirely
                    if rng.random() < 0.3:
                        continue
                    rows.append(['MIA', date, hour, cls,
                                 int(rng.integers(0, 9))])
        records = pd.DataFrame(rows, columns=[AIRPORT_KEY, DATE_KEY,
                                              HOUR_KEY, CLASS_KEY, COUNT_KEY])
        obs = compute_hourly_capability(records, 'MIA').set_index(HOUR_KEY)

        observed_days = sorted(set(r[1] for r in rows))
        for hour in range(24):
            sums = []
            for date in observed_days:
                total = 0
                for _, r_date, r_hour, r_cls, r_count in rows:
                    if r_date == date and r_hour == hour and \
                            r_cls in CAPABILITY_CLASSES:
                        total += r_count
                sums.append(total)
            self.assertAlmostEqual(obs.loc[hour, CAP_MEAN_KEY],
                                   np.mean(sums), delta=1e-9)
            self.assertAlmostEqual(obs.loc[hour, CAP_STD_KEY],
                                   np.std(sums), delta=1e-9)


class DestinationTests(TestCase):
    def setUp(self):
        data_dir = os.path.join(os.path.dirname(__file__), 'data')
        self.history_fp = os.path.join(data_dir,
                                       'flight_history_fixture.csv')

    def test_top_destinations(self):
        obs = top_destinations(self.history_fp, 'DAB')
        self.assertEqual(obs[DEST_ID_KEY].tolist(),
                         ['ATL', 'BOS', 'CLT', 'DCA', 'DEN', 'DFW', 'EWR',
                          'IAD', 'IAH', 'LGA'])
        self.assertEqual(obs[POPULARITY_RAW_KEY].tolist(),
                         [4, 3, 3, 2, 2, 2, 1, 1, 1, 1])
        npt.assert_allclose(obs[DURATION_KEY].tolist()[:5],
                            [2.05, 2.7, 1.5, 2.0, 4.1])

    def test_top_destinations_from_frame(self):
        history = ingest_flight_history(self.history_fp)
        assert_frame_equal(top_destinations(history, 'DAB'),
                           top_destinations(self.history_fp, 'DAB'))

    def test_top_destinations_equal_counts(self):
        dests = ['ORD', 'ATL', 'PHL', 'BOS', 'DEN', 'CLT', 'LGA', 'EWR',
                 'IAH', 'DFW']
        history = pd.DataFrame({'origin': 'TPA', 'dest': dests,
                                'date': '2023-01-01',
                                'duration_hours': 2.0})
        obs = top_destinations(history, 'TPA')
        self.assertEqual(obs[DEST_ID_KEY].tolist(), sorted(dests))

    def test_top_destinations_insufficient(self):
        with self.assertRaisesRegex(InsufficientDestinationsError,
                                    "'MCO' has 2 distinct destinations"):
            top_destinations(self.history_fp, 'MCO')

    def test_top_destinations_nine(self):
        history = pd.DataFrame({'origin': 'TPA',
                                'dest': [f'K{i:03d}' for i in range(9)],
                                'date': '2023-01-01',
                                'duration_hours': 1.0})
        with self.assertRaises(InsufficientDestinationsError):
            top_destinations(history, 'TPA')


class CandidateTableTests(TestCase):
    def _profile(self, airport, c_values, s_values=None):
        if s_values is None:
            s_values = np.zeros(24)
        return pd.DataFrame({AIRPORT_KEY: airport, HOUR_KEY: range(24),
                             CAP_MEAN_KEY: c_values, CAP_STD_KEY: s_values,
                             N_DAYS_KEY: 30})

    def setUp(self):
        self.dest_ids = [f'D{i:02d}' for i in range(10)]
        # destination i has capability 10 * i + hour at every hour
        self.dest_caps = {
            d: self._profile(d, 10.0 * i + np.arange(24),
                             np.full(24, float(i % 3)))
            for i, d in enumerate(self.dest_ids)}
        self.evac_caps = self._profile('DAB', np.arange(24) / 2.0)
        self.dests = pd.DataFrame({
            DEST_ID_KEY: self.dest_ids,
            POPULARITY_RAW_KEY: [100, 90, 80, 70, 60, 50, 40, 30, 20, 10],
            DURATION_KEY: [2.4, 2.5, 1.0, 0.4, 3.6, 1.5, 2.0, 1.2, 4.0,
                           0.2]})

    def test_arrival_hour(self):
        self.assertEqual(arrival_hour(23, 2.4), 1)
        self.assertEqual(arrival_hour(10, 2.5), 13)
        self.assertEqual(arrival_hour(10, 2.49), 12)
        self.assertEqual(arrival_hour(0, 0.2), 0)

    def test_min_max_normalize(self):
        npt.assert_allclose(min_max_normalize([10, 20, 30, 40, 50, 60, 70,
                                               80, 90, 100]),
                            np.arange(10) / 9.0)
        npt.assert_array_equal(min_max_normalize([3.0] * 10),
                               np.full(10, 0.5))

    def test_build_candidate_table(self):
        table = build_candidate_table(self.evac_caps, self.dest_caps,
                                      self.dests, 23)
        self.assertEqual(table.evac_airport, 'DAB')
        self.assertEqual(table.depart_hour, 23)
        self.assertEqual(table.capability, 11.5)
        self.assertEqual(table.dest_ids, self.dest_ids)

        exp_arrival = [1, 2, 0, 23, 3, 1, 1, 0, 3, 23]
        self.assertEqual(table.rows['arrival_hour'].tolist(), exp_arrival)
        exp_c_raw = [10.0 * i + h for i, h in enumerate(exp_arrival)]
        npt.assert_allclose(table.rows['c_raw'], exp_c_raw)

        # popularity 100..10 normalizes to 1..0
        npt.assert_allclose(table.p, np.arange(9, -1, -1) / 9.0)
        for col in (table.p, table.c, table.s):
            self.assertEqual(col.min(), 0.0)
            self.assertEqual(col.max(), 1.0)

    def test_build_candidate_table_constant_popularity(self):
        self.dests[POPULARITY_RAW_KEY] = 5
        table = build_candidate_table(self.evac_caps, self.dest_caps,
                                      self.dests, 0)
        npt.assert_array_equal(table.p, np.full(10, 0.5))

    def test_build_candidate_table_missing_profile(self):
        del self.dest_caps['D03']
        with self.assertRaisesRegex(ValueError, "No capability profile for "
                                                "destination.*D03"):
            build_candidate_table(self.evac_caps, self.dest_caps, self.dests,
                                  0)

    def test_features_round_trip(self):
        table = build_candidate_table(self.evac_caps, self.dest_caps,
                                      self.dests, 7)
        features = table.features()
        self.assertEqual(features.shape, (31,))
        npt.assert_array_equal(features[0:3],
                               [table.p[0], table.c[0], table.s[0]])
        npt.assert_array_equal(features[27:30],
                               [table.p[9], table.c[9], table.s[9]])
        self.assertEqual(features[30], table.capability)

        rebuilt = CandidateTable.from_features(features)
        npt.assert_array_equal(rebuilt.p, table.p)
        npt.assert_array_equal(rebuilt.c, table.c)
        npt.assert_array_equal(rebuilt.s, table.s)
        self.assertEqual(rebuilt.capability, table.capability)
        self.assertEqual(rebuilt.dest_ids[0], 'D1')

    def test_table_arrays_read_only(self):
        table = build_candidate_table(self.evac_caps, self.dest_caps,
                                      self.dests, 0)
        with self.assertRaises(ValueError):
            table.p[0] = 0.3

    def test_table_validation(self):
        features = np.full(31, 0.5)
        with self.assertRaisesRegex(ValueError, "Expected 31 features"):
            CandidateTable.from_features(features[:30])

        features[4] = 1.5
        with self.assertRaisesRegex(ValueError, "'c' must lie in"):
            CandidateTable.from_features(features)

        features[4] = 0.5
        features[30] = -1
        with self.assertRaisesRegex(ValueError, "non-negative"):
            CandidateTable.from_features(features)

        rows = CandidateTable.from_features(np.full(31, 0.5)).rows
        with self.assertRaisesRegex(ValueError, "exactly 10 rows"):
            CandidateTable('DAB', 0, 1.0, rows.head(9))


if __name__ == '__main__':
    main()
