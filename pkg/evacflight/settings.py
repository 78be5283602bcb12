import os
from importlib.resources import files
from types import MappingProxyType
import yaml

_SETTINGS_DIR = "config"
_DEFAULTS_YML_FNAME = "defaults.yml"

FITNESS_SECTION = "fitness"
GA_SECTION = "ga"
MLP_SECTION = "mlp"
HYBRID_SECTION = "hybrid"
SCHEDULER_SECTION = "scheduler"
SYNTHETIC_SECTION = "synthetic"

# run-config-only sections; they have no packaged defaults
DATA_SECTION = "data"
RUN_SECTION = "run"

KNOWN_SECTIONS = (FITNESS_SECTION, GA_SECTION, MLP_SECTION, HYBRID_SECTION,
                  SCHEDULER_SECTION, SYNTHETIC_SECTION, DATA_SECTION,
                  RUN_SECTION)


def _deep_freeze(obj):
    """Recursively freeze a Python object to make it immutable.

    Parameters
    ----------
    obj: Any
        The object to freeze. It can be a dict, list, set, tuple, or any
        immutable type (like str, int, float, etc.).

    Returns
    -------
    Any
        An immutable version of the input object: dicts become
        MappingProxyType, lists and tuples become tuples, sets become
        frozensets, and anything else is returned unchanged.
    """
    if isinstance(obj, (dict, MappingProxyType)):
        return MappingProxyType({k: _deep_freeze(v) for k, v in obj.items()})
    elif isinstance(obj, (list, tuple)):
        return tuple(_deep_freeze(v) for v in obj)
    elif isinstance(obj, set):
        return frozenset(_deep_freeze(v) for v in obj)
    else:
        return obj


def thaw(obj):
    """Undo _deep_freeze so a settings mapping can be dumped to yaml"""
    if isinstance(obj, (dict, MappingProxyType)):
        return {k: thaw(v) for k, v in obj.items()}
    elif isinstance(obj, (list, tuple)):
        return [thaw(v) for v in obj]
    elif isinstance(obj, frozenset):
        return sorted(thaw(v) for v in obj)
    else:
        return obj


def load_defaults(existing_settings=None, test_only_fp=None):
    """Load the packaged default settings.

    Parameters
    ----------
    existing_settings: MappingProxyType, optional
        Settings to use instead of loading from file.  If provided, loading is
        short-circuited and the input is returned.
    test_only_fp: str, optional
        For testing purposes ONLY, a file path to load the settings from.
        Should always be None in production code.

    Returns
    -------
    MappingProxyType
        Immutable nested mapping of settings.

    Raises
    ------
    ValueError
        If existing_settings is not a MappingProxyType or None.
    """
    if existing_settings is not None:
        if not isinstance(existing_settings, MappingProxyType):
            raise ValueError(
                "existing_settings must be a MappingProxyType or None.")
        return existing_settings

    if test_only_fp is None:
        settings_fp = files('evacflight').joinpath(
            f"{_SETTINGS_DIR}/{_DEFAULTS_YML_FNAME}")
    else:
        settings_fp = test_only_fp

    with open(settings_fp, 'r') as f:
        settings = yaml.safe_load(f)

    return _deep_freeze(settings)


def get_section(section, existing_settings=None):
    """Return one top-level section of the settings.

    Raises
    ------
    ValueError
        If the section is not present.
    """
    settings = load_defaults(existing_settings)
    if section not in settings:
        raise ValueError(f"Settings section '{section}' not found.")
    return settings[section]


def read_run_config(config_fp):
    """Read a yaml run config and check its top-level sections.

    Parameters
    ----------
    config_fp: str
        Path to the yaml run config.

    Returns
    -------
    dict
        The (mutable) run config; empty if the file has no content.

    Raises
    ------
    ValueError
        If the path is not a file, the content is not a mapping, or the
        content has unrecognized top-level sections.
    """
    if not os.path.isfile(config_fp):
        raise ValueError(
            "Problem! %s is not a path to a valid file" % config_fp)

    with open(config_fp, 'r') as f:
        run_config = yaml.safe_load(f)

    if run_config is None:
        return {}

    if not isinstance(run_config, dict):
        raise ValueError(f"Run config '{config_fp}' must be a mapping of "
                         f"sections, not {type(run_config).__name__}")

    unknown = sorted(set(run_config) - set(KNOWN_SECTIONS))
    if unknown:
        raise ValueError(f"Run config '{config_fp}' has unrecognized "
                         f"sections: {', '.join(unknown)}")

    return run_config


def merge_settings(base, overrides):
    """Recursively merge overrides over base; both may be frozen.

    Mappings are merged key by key; any other value (including lists) in
    overrides replaces the one in base.  None values in overrides are
    ignored so unset command-line flags don't clobber the config.

    Returns
    -------
    MappingProxyType
        Frozen merged settings.
    """
    merged = thaw(base)
    for key, value in thaw(overrides).items():
        if value is None:
            continue
        if isinstance(value, dict):
            current = merged.get(key)
            if not isinstance(current, dict):
                current = {}
            merged[key] = thaw(merge_settings(current, value))
        else:
            merged[key] = value
    return _deep_freeze(merged)
