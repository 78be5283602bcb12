import time
from unittest import TestCase, main

import numpy as np
import numpy.testing as npt
from pandas.testing import assert_frame_equal

from evacflight.ef_strings import BEST_SO_FAR_KEY, SOURCE_KEY, TRACE_COLUMNS
from evacflight.fitness import fitness
from evacflight.ga import GaConfig, run_ga
from evacflight.hybrid import HybridConfig, inject_random, inject_worst, \
    run_hybrid
from evacflight.mlp import predict, threshold
from evacflight.oracle import solve_exhaustive
from evacflight.tests.example_tables import held_out_model, held_out_tables


class InjectionTests(TestCase):
    def setUp(self):
        self.rng = np.random.default_rng(71)
        self.population = np.zeros((6, 10), dtype=np.uint8)
        self.nn_individuals = np.ones((2, 10), dtype=np.uint8)

    def test_inject_random(self):
        obs = inject_random(self.population, self.nn_individuals, self.rng)
        self.assertEqual(obs.shape, (6, 10))
        self.assertEqual(int(obs.sum(axis=1).astype(bool).sum()), 2)
        # the input population is left alone
        self.assertEqual(self.population.sum(), 0)

    def test_inject_random_distinct_positions(self):
        nn_individuals = np.ones((6, 10), dtype=np.uint8)
        obs = inject_random(self.population, nn_individuals, self.rng)
        npt.assert_array_equal(obs, nn_individuals)

    def test_inject_worst(self):
        fitnesses = [5.0, 1.0, 3.0, 1.0, 4.0, 0.0]
        obs = inject_worst(self.population, fitnesses, self.nn_individuals)
        # the lowest score and, of the two tied at 1.0, the later member
        npt.assert_array_equal(obs.sum(axis=1), [0, 0, 0, 10, 0, 10])

    def test_inject_worst_single(self):
        fitnesses = [0.2, -0.4, 0.1, 0.3, 0.0, 0.9]
        obs = inject_worst(self.population, fitnesses,
                           self.nn_individuals[:1])
        npt.assert_array_equal(obs.sum(axis=1), [0, 10, 0, 0, 0, 0])

    def test_inject_nothing(self):
        empty = np.empty((0, 10), dtype=np.uint8)
        npt.assert_array_equal(
            inject_random(self.population, empty, self.rng), self.population)
        npt.assert_array_equal(
            inject_worst(self.population, np.zeros(6), empty),
            self.population)

    def test_inject_too_many(self):
        too_many = np.ones((7, 10), dtype=np.uint8)
        with self.assertRaisesRegex(ValueError, "Cannot inject 7"):
            inject_random(self.population, too_many, self.rng)
        with self.assertRaisesRegex(ValueError, "Cannot inject 7"):
            inject_worst(self.population, np.zeros(6), too_many)


class HybridConfigTests(TestCase):
    def setUp(self):
        self.model = held_out_model()

    def test_injection_count(self):
        def count(fraction, pop):
            return HybridConfig(GaConfig(pop, 5), fraction, 'random',
                                self.model).injection_count

        self.assertEqual(count(0.2, 15), 3)
        self.assertEqual(count(0.1, 15), 2)
        self.assertEqual(count(0.2, 75), 15)
        self.assertEqual(count(1.0, 10), 10)

    def test_validation(self):
        ga = GaConfig(10, 5)
        with self.assertRaisesRegex(ValueError, r"injection_fraction must be "
                                                r"in \(0, 1\]"):
            HybridConfig(ga, 0.0, 'random', self.model)
        with self.assertRaisesRegex(ValueError, "injection_fraction"):
            HybridConfig(ga, 1.5, 'random', self.model)
        with self.assertRaisesRegex(ValueError, "injects no individuals"):
            HybridConfig(ga, 0.01, 'random', self.model)
        with self.assertRaisesRegex(ValueError, "approach must be one of "
                                                "random, worst"):
            HybridConfig(ga, 0.2, 'best', self.model)
        with self.assertRaisesRegex(ValueError, "trained model is required"):
            HybridConfig(ga, 0.2, 'random', None)

    def test_from_settings(self):
        config = HybridConfig.from_settings(self.model)
        self.assertEqual(config.ga.population_size, 15)
        self.assertEqual(config.ga.num_generations, 5)
        self.assertEqual(config.ga.crossover_rate, 0.9)
        self.assertEqual(config.approach, 'random')
        self.assertEqual(config.injection_count, 3)

        config = HybridConfig.from_settings(self.model, approach='worst',
                                            population_size=20, seed=4)
        self.assertEqual(config.approach, 'worst')
        self.assertEqual(config.ga.population_size, 20)
        self.assertEqual(config.ga.seed, 4)

        config = HybridConfig.from_settings(self.model, crossover_rate=0.6,
                                            mutation_rate=None)
        self.assertEqual(config.ga.crossover_rate, 0.6)
        self.assertEqual(config.ga.mutation_rate, 0.05)

    def test_with_seed_and_to_dict(self):
        config = HybridConfig.from_settings(self.model).with_seed(12)
        obs = config.to_dict()
        self.assertEqual(obs['seed'], 12)
        self.assertEqual(obs['approach'], 'random')
        self.assertEqual(obs['injection_fraction'], 0.2)
        self.assertEqual(obs['model_epochs'], 5)
        self.assertIs(config.model, self.model)


class RunHybridTests(TestCase):
    def setUp(self):
        self.model = held_out_model()
        self.tables = held_out_tables()
        self.table = self.tables[14]

    def _config(self, approach='random', fraction=0.2, seed=0,
                population_size=15, num_generations=5):
        return HybridConfig(GaConfig(population_size, num_generations,
                                     seed=seed), fraction, approach,
                            self.model)

    def test_zero_injection_is_plain_ga(self):
        for approach in ('random', 'worst'):
            config = self._config(approach, seed=3)
            best, trace = run_hybrid(self.table, config, injection_count=0)
            exp_best, exp_trace = run_ga(self.table, config.ga)
            npt.assert_array_equal(best, exp_best)
            assert_frame_equal(trace[list(TRACE_COLUMNS)], exp_trace)
            self.assertEqual(trace[SOURCE_KEY].tolist(), [0] * 5)

    def test_trace_source(self):
        config = self._config(fraction=0.25)
        _, trace = run_hybrid(self.table, config)
        self.assertEqual(trace[SOURCE_KEY].tolist(), [4] * 5)
        self.assertTrue((np.diff(trace[BEST_SO_FAR_KEY]) >= 0).all())

    def test_injection_count_out_of_range(self):
        with self.assertRaisesRegex(ValueError, "injection count 16 outside "
                                                "0-15"):
            run_hybrid(self.table, self._config(), injection_count=16)

    def test_deterministic(self):
        config = self._config('worst', seed=5)
        best_a, trace_a = run_hybrid(self.table, config)
        best_b, trace_b = run_hybrid(self.table, config)
        npt.assert_array_equal(best_a, best_b)
        assert_frame_equal(trace_a, trace_b)

    def test_full_injection_keeps_prediction(self):
        for table in self.tables[::4]:
            predicted = threshold(predict(self.model, table))
            floor = fitness(predicted, table).score
            for approach in ('random', 'worst'):
                best, _ = run_hybrid(table, self._config(approach, 1.0))
                self.assertGreaterEqual(fitness(best, table).score,
                                        floor - 1e-12)

    def test_random_not_worse_than_worst(self):
        random_scores, worst_scores = [], []
        for table in self.tables:
            for seed in range(10):
                best, _ = run_hybrid(table, self._config('random', seed=seed))
                random_scores.append(fitness(best, table).score)
                best, _ = run_hybrid(table, self._config('worst', seed=seed))
                worst_scores.append(fitness(best, table).score)
        self.assertGreaterEqual(np.mean(random_scores),
                                np.mean(worst_scores) - 0.05)


class AccelerationTests(TestCase):
    def test_small_hybrid_beats_small_ga(self):
        model = held_out_model()
        tables = held_out_tables()

        hybrid_scores, ga_scores, oracle_scores = [], [], []
        start = time.time()
        for table in tables:
            oracle = solve_exhaustive(table).best_fitness
            for seed in range(10):
                ga = GaConfig(15, 5, seed=seed)
                best, _ = run_hybrid(table, HybridConfig(ga, 0.2, 'random',
                                                         model))
                hybrid_scores.append(fitness(best, table).score)
                best, _ = run_ga(table, ga)
                ga_scores.append(fitness(best, table).score)
                oracle_scores.append(oracle)
        elapsed = time.time() - start

        self.assertGreaterEqual(np.mean(hybrid_scores), np.mean(ga_scores))
        self.assertGreaterEqual(np.mean(hybrid_scores),
                                0.95 * np.mean(oracle_scores))
        self.assertLess(elapsed, 10)


if __name__ == '__main__':
    main()
