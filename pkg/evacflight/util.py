import json
import os
import warnings

import click
import numpy as np

# fixed spawn keys: one stream per consumer of randomness, so adding draws to
# one component never shifts another component's numbers
_SEED_COMPONENTS = {
    'synthetic': 0,
    'ga': 1,
    'nn_init': 2,
    'nn_sampling': 3,
    'split': 4,
    'compare': 5,
}


class Message(object):
    _color = None

    def __init__(self, message):
        self.message = message

    def __str__(self):
        return '%s: %s' % (self.__class__.__name__, self.message)

    def __eq__(self, other):
        if isinstance(other, self.__class__):
            if self.message == other.message and self._color == other._color:
                return True

        return False

    def echo(self):
        prefix, suffix = str(self).split(': ', maxsplit=1)
        click.echo(click.style(prefix + ': ', fg=self._color) + suffix,
                   err=True)


class ErrorMessage(Message):
    _color = 'red'


class WarningMessage(Message):
    _color = 'yellow'


class InfoMessage(Message):
    _color = 'green'


def derive_seed(seed, component, *keys):
    """Derive a child seed for one component of a run from the global seed.

    Parameters
    ----------
    seed: int
        The global (non-negative) seed of the run.
    component: str
        One of the registered components, e.g. 'ga' or 'nn_init'.
    keys: int
        Further non-negative integers (hour, seed index, ...) that pick a
        distinct stream inside the component.

    Returns
    -------
    int
        A 32-bit seed that is a pure function of the inputs.

    Raises
    ------
    ValueError
        If the component is unknown or a key is negative.
    """
    if component not in _SEED_COMPONENTS:
        raise ValueError(f"Unknown seed component '{component}'; expected "
                         f"one of {', '.join(sorted(_SEED_COMPONENTS))}")
    if seed < 0 or any(k < 0 for k in keys):
        raise ValueError("Seeds and seed keys must be non-negative")

    spawn_key = (_SEED_COMPONENTS[component],) + tuple(int(k) for k in keys)
    sequence = np.random.SeedSequence(entropy=int(seed), spawn_key=spawn_key)
    return int(sequence.generate_state(1, dtype=np.uint32)[0])


def check_fp(fp):
    if not os.path.isfile(fp):
        raise ValueError("Problem! %s is not a path to a valid file" % fp)


def warn_if_fp_exists(fp):
    if os.path.isfile(fp):
        warnings.warn(f"Overwriting existing file '{fp}'")


def drop_unnamed_nan_columns(df):
    """
    Drops columns whose names start with 'Unnamed:' and contain only NaN values
    """
    return df.drop(
        columns=[
            col for col in df.columns
            if col.startswith('Unnamed:') and df[col].isna().all()
        ]
    )


def write_frame(df, fp):
    """Write a DataFrame as comma-delimited UTF-8 with stable line endings"""
    warn_if_fp_exists(fp)
    df.to_csv(fp, index=False, lineterminator='\n', encoding='utf-8')


def write_json(obj, fp):
    warn_if_fp_exists(fp)
    # sort_keys keeps the output byte-stable across runs
    with open(fp, 'w', encoding='utf-8') as f:
        f.write(json.dumps(obj, indent=2, sort_keys=True))
        f.write('\n')
