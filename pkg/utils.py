import json
import math
import sys
from fractions import Fraction
from pathlib import Path

import numpy as np
import pandas as pd
import yaml
from tabulate import tabulate

from logic.errors import ParameterError

ROOT = Path(__file__).resolve().parent
DEFAULT_CONFIG_PATH = ROOT / 'config' / 'defaults.yaml'
FORMATS = ('json', 'csv', 'text')
BANNER_WIDTH = 100


def _read_yaml(path):
    try:
        with open(path) as stream:
            data = yaml.safe_load(stream)
    except OSError as error:
        raise ParameterError(f'cannot read config file {path}: {error}') from error
    except yaml.YAMLError as error:
        raise ParameterError(f'config file {path} is not valid YAML: {error}') from error
    if data is None:
        return {}
    if not isinstance(data, dict):
        raise ParameterError(f'config file {path} must hold a mapping')
    return data


def merge_config(base, update, prefix=''):
    # Keys of `update` must already exist in `base`; None leaves a value alone
    merged = dict(base)
    for key, value in update.items():
        name = f'{prefix}{key}'
        if key not in base:
            raise ParameterError(f'unknown config key {name!r}')
        if isinstance(base[key], dict):
            if not isinstance(value, dict):
                raise ParameterError(f'config key {name!r} must be a mapping')
            merged[key] = merge_config(base[key], value, f'{name}.')
        elif value is not None:
            merged[key] = value
    return merged


def load_config(config_path=None, overrides=None):
    # Shipped defaults, then the config file, then flag overrides
    config = _read_yaml(DEFAULT_CONFIG_PATH)
    if config_path is not None:
        config = merge_config(config, _read_yaml(config_path))
    if overrides:
        config = merge_config(config, overrides)
    if config['output']['format'] not in FORMATS:
        raise ParameterError(f'output format must be one of {FORMATS}, '
                             f'got {config["output"]["format"]!r}')
    return config


def to_plain(value):
    # JSON-ready copy of a record value
    if isinstance(value, dict):
        return {key: to_plain(item) for key, item in value.items()}
    if isinstance(value, (list, tuple)):
        return [to_plain(item) for item in value]
    if isinstance(value, Fraction):
        return int(value) if value.denominator == 1 else str(value)
    if isinstance(value, (np.integer, np.bool_)):
        return value.item()
    if isinstance(value, np.floating):
        return float(value)
    return value


def _banner(title=''):
    text = f' {title} ' if title else ''
    return f'{text:#^{BANNER_WIDTH}}'


def _text(records, title, stream):
    print(_banner(title), file=stream)
    if len(records) == 1:
        left = max(len(str(key)) for key in records[0]) + 2
        right = BANNER_WIDTH - left
        for key, value in records[0].items():
            value = '' if value is None else value
            print(f'{f"{key}:":<{left}}{str(value):>{right}}', file=stream)
    elif records:
        print(tabulate(records, headers='keys', missingval='-'), file=stream)
    print(_banner(), file=stream)


def write_records(records, output_format='json', stream=None, title=None, document=False,
                  float_format=None):
    """Serialize records as JSON Lines (or one JSON document), CSV or a text table."""
    stream = stream or sys.stdout
    records = [to_plain(record) for record in records]
    if output_format == 'json':
        if document:
            stream.write(json.dumps(records, indent=2) + '\n')
        else:
            for record in records:
                stream.write(json.dumps(record) + '\n')
    elif output_format == 'csv':
        pd.DataFrame(records).to_csv(stream, index=False, float_format=float_format,
                                     lineterminator='\n')
    elif output_format == 'text':
        _text(records, title or '', stream)
    else:
        raise ParameterError(f'output format must be one of {FORMATS}, got {output_format!r}')


def round_or_none(value, digits=2):
    if value is None or (isinstance(value, float) and math.isnan(value)):
        return None
    return round(float(value), digits)
