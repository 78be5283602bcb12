#!/usr/bin/env python

import functools
import os
import sys
import warnings
from datetime import datetime
from os.path import abspath, join

import click
import pandas as pd
import yaml

from evacflight import __version__
from evacflight.capability import ingest_operations, ingest_flight_history, \
    compute_hourly_capability, top_destinations, EmptyHistoryError, \
    InsufficientDestinationsError
from evacflight.ef_strings import AIRPORT_KEY, ORIGIN_KEY, SOLVER_NAMES, \
    APPROACH_NAMES, GA_SOLVER, HYBRID_SOLVER, DEST_ID_KEY
from evacflight.fitness import weights_from_settings
from evacflight.mlp import MlpModel, EmptyDatasetError, synthesize_dataset, \
    write_dataset, read_dataset, split_dataset, train_from_settings, \
    evaluate
from evacflight.scheduler import HistoryData, SolverSpec, \
    build_day_schedule, read_schedule, flight_count_agreement, \
    compare_solvers, summarize_by_hour, summarize_by_config, \
    selection_frequency, train_held_out_model, ga_solver, hybrid_solver, \
    popgen_sweep, epoch_sweep, approach_sweep, solvers_from_entries
from evacflight.settings import load_defaults, read_run_config, \
    merge_settings, thaw, FITNESS_SECTION, GA_SECTION, MLP_SECTION, \
    HYBRID_SECTION, SCHEDULER_SECTION, SYNTHETIC_SECTION, DATA_SECTION, \
    RUN_SECTION
from evacflight.synthetic import SyntheticConfig, write_synthetic_history
from evacflight.util import ErrorMessage, WarningMessage, InfoMessage, \
    derive_seed, warn_if_fp_exists, write_frame, write_json

RUN_CONFIG_FNAME = 'run_config.yml'

POPGEN_SWEEP = 'popgen'
EPOCH_SWEEP = 'epochs'
APPROACH_SWEEP = 'approaches'
CUSTOM_SWEEP = 'custom'
SWEEPS = (POPGEN_SWEEP, EPOCH_SWEEP, APPROACH_SWEEP, CUSTOM_SWEEP)


def _reports_errors(func):
    """Echo library warnings as WarningMessages and turn a ValueError into an
    ErrorMessage and exit code 1."""
    @functools.wraps(func)
    def wrapper(*args, **kwargs):
        with warnings.catch_warnings(record=True) as caught:
            warnings.simplefilter('always')
            try:
                func(*args, **kwargs)
            except ValueError as e:
                _echo_warnings(caught)
                ErrorMessage(e).echo()
                sys.exit(1)
        _echo_warnings(caught)
    return wrapper


def _echo_warnings(caught):
    for w in caught:
        WarningMessage(w.message).echo()


def _common_options(func):
    func = click.option('--verbose', is_flag=True,
                        help='list output paths on stdout')(func)
    func = click.option('--out', 'output_dir', type=click.Path(),
                        help='output directory (run.out in the config)')(func)
    func = click.option('--seed', type=int,
                        help='global seed (run.seed in the config, '
                             'default 0)')(func)
    func = click.option('--config', 'config_fp',
                        type=click.Path(exists=True, dir_okay=False),
                        help='yaml run config merged over the packaged '
                             'defaults')(func)
    return func


def _resolve_settings(config_fp, flag_overrides):
    """Packaged defaults, then the run config, then command-line flags"""
    settings = load_defaults()
    if config_fp is not None:
        settings = merge_settings(settings, read_run_config(config_fp))
    return merge_settings(settings, flag_overrides)


def _run_value(settings, key, default=None):
    return settings.get(RUN_SECTION, {}).get(key, default)


def _data_value(settings, key, flag):
    value = settings.get(DATA_SECTION, {}).get(key)
    if value is None:
        raise ValueError(f"No {key.replace('_', ' ')} file given; pass "
                         f"{flag} or set {DATA_SECTION}.{key} in the config")
    return value


def _output_dir(settings):
    output_dir = _run_value(settings, 'out')
    if output_dir is None:
        raise ValueError(f"No output directory given; pass --out or set "
                         f"{RUN_SECTION}.out in the config")
    os.makedirs(output_dir, exist_ok=True)
    return output_dir


def _evac_airport(settings):
    airport = _run_value(settings, 'airport')
    if airport is None:
        raise ValueError(f"No evacuating airport given; pass --airport or set "
                         f"{RUN_SECTION}.airport in the config")
    return airport


def _write_run_config(settings, command, output_dir):
    """Snapshot of the effective settings; created_at is the only field that
    changes between identical runs."""
    snapshot = thaw(settings)
    snapshot.setdefault(RUN_SECTION, {})
    snapshot[RUN_SECTION].update({
        'command': command,
        'version': __version__,
        'created_at': datetime.now().isoformat(timespec='seconds')})
    fp = join(output_dir, RUN_CONFIG_FNAME)
    warn_if_fp_exists(fp)
    with open(fp, 'w', encoding='utf-8') as f:
        yaml.safe_dump(snapshot, f, default_flow_style=False, sort_keys=True)
    return fp


def _load_history(settings):
    return HistoryData.from_files(
        _data_value(settings, 'operations', '--operations'),
        _data_value(settings, 'flight_history', '--flight-history'))


def _echo_paths(verbose, *fps):
    if verbose:
        for fp in fps:
            print(abspath(fp))


@click.group()
@click.version_option(__version__)
def evacflight():
    """Hourly evacuation flight schedules for a disaster-impacted airport.

    The usual order is ingest (or generate-history), synth-data, train,
    then schedule and compare.
    """
    pass


@evacflight.command('generate-history')
@_common_options
@_reports_errors
def generate_history(config_fp, seed, output_dir, verbose):
    """Write synthetic operations.csv and flight_history.csv

    The airports, window and rate curves come from the 'synthetic' section of
    the settings.
    """
    settings = _resolve_settings(config_fp, {
        RUN_SECTION: {'seed': seed, 'out': output_dir}})
    output_dir = _output_dir(settings)
    seed = _run_value(settings, 'seed', 0)

    config = SyntheticConfig.from_settings(settings[SYNTHETIC_SECTION])
    ops_fp, history_fp = write_synthetic_history(
        config, derive_seed(seed, 'synthetic'), output_dir)
    run_fp = _write_run_config(settings, 'generate-history', output_dir)

    InfoMessage(f"{len(config.airports)} airports over {config.days} "
                f"days").echo()
    _echo_paths(verbose, ops_fp, history_fp, run_fp)


@evacflight.command()
@click.option('--operations', type=click.Path(exists=True, dir_okay=False),
              help='hourly operations CSV')
@click.option('--flight-history', type=click.Path(exists=True, dir_okay=False),
              help='flight-history CSV; also writes top-ten destinations')
@click.option('--airport', 'airports', multiple=True,
              help='only profile these airports (repeatable)')
@_common_options
@_reports_errors
def ingest(operations, flight_history, airports, config_fp, seed, output_dir,
           verbose):
    """Validate input files and write per-airport capability summaries

    One capability_<AIRPORT>.csv with 24 rows (hour, c, s, n_days) is
    written per airport and, when a flight history is given, one
    destinations_<AIRPORT>.csv per origin serving ten or more destinations.
    """
    settings = _resolve_settings(config_fp, {
        DATA_SECTION: {'operations': operations,
                       'flight_history': flight_history},
        RUN_SECTION: {'seed': seed, 'out': output_dir}})
    output_dir = _output_dir(settings)

    records = ingest_operations(_data_value(settings, 'operations',
                                            '--operations'))
    known = sorted(records[AIRPORT_KEY].unique())
    missing = [a for a in airports if a not in known]
    if missing:
        raise ValueError(f"Airport(s) {', '.join(missing)} not in the "
                         f"operations file")

    written = []
    for airport in (list(airports) or known):
        try:
            caps = compute_hourly_capability(records, airport)
        except EmptyHistoryError as e:
            if airports:
                raise
            warnings.warn(str(e))
            continue
        fp = join(output_dir, f'capability_{airport}.csv')
        write_frame(caps, fp)
        written.append(fp)

    history_fp = settings.get(DATA_SECTION, {}).get('flight_history')
    if history_fp is not None:
        history = ingest_flight_history(history_fp)
        origins = sorted(history[ORIGIN_KEY].unique())
        for airport in (list(airports) or origins):
            try:
                dests = top_destinations(history, airport)
            except InsufficientDestinationsError as e:
                warnings.warn(str(e))
                continue
            fp = join(output_dir, f'destinations_{airport}.csv')
            write_frame(dests, fp)
            written.append(fp)

    written.append(_write_run_config(settings, 'ingest', output_dir))
    _echo_paths(verbose, *written)


@evacflight.command('synth-data')
@click.option('--operations', type=click.Path(exists=True, dir_okay=False),
              help='hourly operations CSV')
@click.option('--flight-history', type=click.Path(exists=True, dir_okay=False),
              help='flight-history CSV')
@click.option('--exclude', multiple=True,
              help='airport held out of the dataset (repeatable)')
@_common_options
@_reports_errors
def synth_data(operations, flight_history, exclude, config_fp, seed,
               output_dir, verbose):
    """Write the oracle-labeled training dataset

    dataset.csv has the columns A1..A30, C, S1..S10 with one row per
    (airport, hour) table; dataset_index.csv names the airport and hour of
    every row.
    """
    settings = _resolve_settings(config_fp, {
        DATA_SECTION: {'operations': operations,
                       'flight_history': flight_history,
                       'exclude': list(exclude) or None},
        RUN_SECTION: {'seed': seed, 'out': output_dir}})
    output_dir = _output_dir(settings)
    exclude = list(settings.get(DATA_SECTION, {}).get('exclude', []))

    data = _load_history(settings)
    tables, index = data.training_tables(exclude=exclude)
    if len(tables) == 0:
        raise EmptyDatasetError(f"No tables remain after excluding "
                                f"{', '.join(exclude) or 'nothing'}")

    weights = weights_from_settings(settings[FITNESS_SECTION])
    dataset = synthesize_dataset(tables, weights)

    dataset_fp = join(output_dir, 'dataset.csv')
    index_fp = join(output_dir, 'dataset_index.csv')
    write_dataset(dataset, dataset_fp)
    write_frame(index, index_fp)
    run_fp = _write_run_config(settings, 'synth-data', output_dir)

    InfoMessage(f"{len(dataset)} rows from "
                f"{index[AIRPORT_KEY].nunique()} airports").echo()
    _echo_paths(verbose, dataset_fp, index_fp, run_fp)


@evacflight.command()
@click.option('--dataset', 'dataset_fp',
              type=click.Path(exists=True, dir_okay=False),
              help='training CSV written by synth-data')
@click.option('--epochs', type=int, help='passes over the training rows')
@click.option('--learning-rate', type=float)
@click.option('--batch-size', type=int)
@click.option('--optimizer', type=click.Choice(['adam', 'sgd']))
@click.option('--validation-fraction', type=float,
              help='share of rows held out to report exact-match rate and '
                   'Hamming loss')
@_common_options
@_reports_errors
def train(dataset_fp, epochs, learning_rate, batch_size, optimizer,
          validation_fraction, config_fp, seed, output_dir, verbose):
    """Train the selection network; writes model.json and loss_curve.csv"""
    settings = _resolve_settings(config_fp, {
        DATA_SECTION: {'dataset': dataset_fp},
        MLP_SECTION: {'epochs': epochs, 'learning_rate': learning_rate,
                      'batch_size': batch_size, 'optimizer': optimizer,
                      'validation_fraction': validation_fraction},
        RUN_SECTION: {'seed': seed, 'out': output_dir}})
    output_dir = _output_dir(settings)
    seed = _run_value(settings, 'seed', 0)
    mlp_section = settings[MLP_SECTION]

    dataset = read_dataset(_data_value(settings, 'dataset', '--dataset'))
    train_df, valid_df = split_dataset(
        dataset, mlp_section['validation_fraction'], seed)
    model = train_from_settings(train_df, seed, mlp_section)

    model_fp = join(output_dir, 'model.json')
    curve_fp = join(output_dir, 'loss_curve.csv')
    model.save(model_fp)
    loss_curve = model.metadata['loss_curve']
    write_frame(pd.DataFrame({'epoch': range(1, len(loss_curve) + 1),
                              'loss': loss_curve}), curve_fp)
    written = [model_fp, curve_fp]

    if len(valid_df) > 0:
        metrics = {'train': evaluate(model, train_df),
                   'validation': evaluate(model, valid_df)}
        metrics_fp = join(output_dir, 'metrics.json')
        write_json(metrics, metrics_fp)
        written.append(metrics_fp)

    written.append(_write_run_config(settings, 'train', output_dir))
    InfoMessage(f"final loss {loss_curve[-1]:.6f} after "
                f"{len(loss_curve)} epochs").echo()
    _echo_paths(verbose, *written)


def _model_for(settings, data, airport, seed, weights):
    """The model given in the settings, or one trained with the evacuating
    airport held out for the hybrid's epoch count."""
    model_fp = settings.get(DATA_SECTION, {}).get('model')
    if model_fp is not None:
        return MlpModel.load(model_fp)
    InfoMessage(f"training a network with '{airport}' held out").echo()
    return train_held_out_model(
        data, airport, seed, settings[MLP_SECTION], weights,
        epochs=settings[HYBRID_SECTION]['epochs'])


@evacflight.command()
@click.option('--airport', help='evacuating airport')
@click.option('--operations', type=click.Path(exists=True, dir_okay=False))
@click.option('--flight-history', type=click.Path(exists=True, dir_okay=False))
@click.option('--solver', type=click.Choice(SOLVER_NAMES),
              help='run.solver in the config, default ga')
@click.option('--pop', 'population_size', type=int,
              help='population size of the ga or hybrid solver')
@click.option('--gens', 'num_generations', type=int,
              help='generations of the ga or hybrid solver')
@click.option('--approach', type=click.Choice(APPROACH_NAMES),
              help='how the hybrid injects network individuals')
@click.option('--injection-fraction', type=float)
@click.option('--model', 'model_fp', type=click.Path(exists=True,
                                                     dir_okay=False),
              help='trained model for the hybrid; trained on the fly with '
                   'the airport held out when absent')
@click.option('--reference-schedule', type=click.Path(exists=True,
                                                      dir_okay=False),
              help='schedule.json of another run to compare flight counts '
                   'with')
@_common_options
@_reports_errors
def schedule(airport, operations, flight_history, solver, population_size,
             num_generations, approach, injection_fraction, model_fp,
             reference_schedule, config_fp, seed, output_dir, verbose):
    """Solve the 24 hourly tables of an airport; writes schedule.json and
    schedule.csv"""
    settings = _resolve_settings(config_fp, {
        DATA_SECTION: {'operations': operations,
                       'flight_history': flight_history, 'model': model_fp},
        HYBRID_SECTION: {'approach': approach,
                         'injection_fraction': injection_fraction},
        RUN_SECTION: {'seed': seed, 'out': output_dir, 'airport': airport,
                      'solver': solver}})
    solver = _run_value(settings, 'solver', GA_SOLVER)

    # --pop and --gens size whichever solver runs
    solver_section = HYBRID_SECTION if solver == HYBRID_SOLVER else \
        GA_SECTION
    size = {'population_size': population_size,
            'num_generations': num_generations}
    settings = merge_settings(settings, {RUN_SECTION: {'solver': solver},
                                         solver_section: size})
    output_dir = _output_dir(settings)
    seed = _run_value(settings, 'seed', 0)
    airport = _evac_airport(settings)
    weights = weights_from_settings(settings[FITNESS_SECTION])

    data = _load_history(settings)
    ga_section = settings[GA_SECTION]
    if solver == HYBRID_SOLVER:
        model = _model_for(settings, data, airport, seed, weights)
        spec = hybrid_solver(model, hybrid_section=settings[HYBRID_SECTION],
                             ga_section=ga_section)
    elif solver == GA_SOLVER:
        spec = ga_solver(ga_section['population_size'],
                         ga_section['num_generations'], ga_section)
    else:
        spec = SolverSpec(solver)

    day = build_day_schedule(airport, data, spec, seed, weights)
    json_fp, csv_fp = day.write(output_dir)
    written = [json_fp, csv_fp]

    if reference_schedule is not None:
        agreement = flight_count_agreement(day,
                                           read_schedule(reference_schedule))
        agreement_fp = join(output_dir, 'agreement.csv')
        write_frame(agreement, agreement_fp)
        written.append(agreement_fp)
        InfoMessage(f"flight counts agree on {int(agreement['agree'].sum())}"
                    f" of {len(agreement)} hours").echo()

    written.append(_write_run_config(settings, 'schedule', output_dir))
    InfoMessage(f"{sum(day.n_flights)} flights scheduled from {airport}, "
                f"total fitness {day.total_fitness:.4f}").echo()
    _echo_paths(verbose, *written)


@evacflight.command()
@click.option('--airport', help='evacuating airport')
@click.option('--operations', type=click.Path(exists=True, dir_okay=False))
@click.option('--flight-history', type=click.Path(exists=True, dir_okay=False))
@click.option('--sweep', type=click.Choice(SWEEPS),
              help='run.sweep in the config, default popgen.  popgen: GA '
                   'population x generations grid; epochs: hybrids trained '
                   'for each epoch count; approaches: GA vs both hybrids; '
                   'custom: scheduler.solvers of the config')
@click.option('--seeds', 'n_seeds', type=int,
              help='runs per (hour, config)')
@click.option('--model', 'model_fp', type=click.Path(exists=True,
                                                     dir_okay=False))
@_common_options
@_reports_errors
def compare(airport, operations, flight_history, sweep, n_seeds, model_fp,
            config_fp, seed, output_dir, verbose):
    """Compare solver configs hour by hour over several seeds

    Writes comparison.csv (one row per hour, config and seed) and the
    summary_by_hour.csv, summary_by_config.csv and selection_frequency.csv
    reductions of it.  The first config of a sweep is the reference for
    Hamming distances and flight-count agreement.
    """
    settings = _resolve_settings(config_fp, {
        DATA_SECTION: {'operations': operations,
                       'flight_history': flight_history, 'model': model_fp},
        SCHEDULER_SECTION: {'n_seeds': n_seeds},
        RUN_SECTION: {'seed': seed, 'out': output_dir, 'airport': airport,
                      'sweep': sweep}})
    sweep = _run_value(settings, 'sweep', POPGEN_SWEEP)
    if sweep not in SWEEPS:
        raise ValueError(f"Unknown sweep '{sweep}'; expected one of "
                         f"{', '.join(SWEEPS)}")
    settings = merge_settings(settings, {RUN_SECTION: {'sweep': sweep}})
    output_dir = _output_dir(settings)
    seed = _run_value(settings, 'seed', 0)
    airport = _evac_airport(settings)
    weights = weights_from_settings(settings[FITNESS_SECTION])
    scheduler_section = settings[SCHEDULER_SECTION]
    ga_section = settings[GA_SECTION]
    hybrid_section = settings[HYBRID_SECTION]

    data = _load_history(settings)
    if sweep == POPGEN_SWEEP:
        grid = scheduler_section['popgen_sweep']
        solvers = popgen_sweep(grid['population_sizes'], grid['generations'],
                               ga_section)
    elif sweep == EPOCH_SWEEP:
        models = [train_held_out_model(data, airport, seed,
                                       settings[MLP_SECTION], weights,
                                       epochs=e)
                  for e in scheduler_section['epoch_sweep']]
        solvers = epoch_sweep(models, hybrid_section, ga_section)
    elif sweep == APPROACH_SWEEP:
        model = _model_for(settings, data, airport, seed, weights)
        solvers = approach_sweep(model, hybrid_section, ga_section)
    else:
        entries = scheduler_section.get('solvers', ())
        if len(entries) == 0:
            raise ValueError(f"The custom sweep needs a list of solvers in "
                             f"{SCHEDULER_SECTION}.solvers")
        model = None
        if any(e.get('solver') == HYBRID_SOLVER for e in entries):
            model = _model_for(settings, data, airport, seed, weights)
        solvers = solvers_from_entries(entries, model, hybrid_section,
                                       ga_section)

    report = compare_solvers(airport, data, solvers,
                             scheduler_section['n_seeds'], seed, weights)
    dest_ids = data.destinations(airport)[DEST_ID_KEY].tolist()

    outputs = {'comparison.csv': report,
               'summary_by_hour.csv': summarize_by_hour(report),
               'summary_by_config.csv': summarize_by_config(report),
               'selection_frequency.csv': selection_frequency(report,
                                                              dest_ids)}
    written = []
    for fname, df in outputs.items():
        fp = join(output_dir, fname)
        write_frame(df, fp)
        written.append(fp)

    written.append(_write_run_config(settings, 'compare', output_dir))
    InfoMessage(f"{len(solvers)} configs x {scheduler_section['n_seeds']} "
                f"seeds x 24 hours compared").echo()
    _echo_paths(verbose, *written)


if __name__ == '__main__':
    evacflight()
