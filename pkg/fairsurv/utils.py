import hashlib
import json
import math

import numpy as np


def split_path(path, separator='.'):
    """Split a dotted override path into its parts.

    Numeric parts are turned into list positions: ``'targets.0.risk'`` gives
    ``['targets', 0, 'risk']``.
    """

    parts = []
    for part in path.split(separator):
        if not part:
            raise ValueError('Empty segment in path "{}".'.format(path))
        parts.append(int(part) if part.isdigit() else part)
    return parts


def set_path(dictionary, path, value):
    """Set a value deep inside nested dicts and lists.

    Missing intermediate dictionaries are created. The dictionary is updated in
    place and returned.

    Args:
        dictionary (dict): The dictionary to update.
        path (str): Dotted path (``core_model.c_index``).
        value: The value to set.
    Return:
        dict: The updated dictionary.
    """

    parts = split_path(path)
    node = dictionary
    for part, following in zip(parts, parts[1:]):
        if isinstance(node, list):
            node = node[part]
            continue
        child = node.get(part)
        if child is None:
            child = [] if isinstance(following, int) else {}
            node[part] = child
        node = child

    last = parts[-1]
    if isinstance(node, list):
        if last == len(node):
            node.append(value)
        else:
            node[last] = value
    else:
        node[last] = value
    return dictionary


def parse_override(expression):
    """Parse a ``path=value`` override; the value is read as JSON if it can."""

    if '=' not in expression:
        raise ValueError(
            'Override "{}" should be of the form path=value.'.format(
                expression))

    path, raw = expression.split('=', 1)
    try:
        value = json.loads(raw)
    except json.JSONDecodeError:
        value = raw
    return path.strip(), value


def json_pointer(path, key):
    """Append a key to a JSON pointer (RFC 6901 escaping)."""

    token = str(key).replace('~', '~0').replace('/', '~1')
    return '{}/{}'.format(path, token)


def to_builtin(value):
    """Convert numpy containers and scalars into JSON friendly values."""

    if isinstance(value, dict):
        return {str(key): to_builtin(val) for key, val in value.items()}
    if isinstance(value, (list, tuple)):
        return [to_builtin(item) for item in value]
    if isinstance(value, np.ndarray):
        return to_builtin(value.tolist())
    if isinstance(value, np.bool_):
        return bool(value)
    if isinstance(value, np.integer):
        return int(value)
    if isinstance(value, (np.floating, float)):
        value = float(value)
        return value if math.isfinite(value) else None
    return value


def canonical_json(value):
    return json.dumps(
        to_builtin(value), sort_keys=True, separators=(',', ':'))


def sha256(value):
    return hashlib.sha256(canonical_json(value).encode('utf-8')).hexdigest()
