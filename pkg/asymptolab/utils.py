import os
import json
import hashlib
import tempfile
from pathlib import Path

import numpy as np
import pandas as pd
import torch


def set_tensor_type(float_bits=64):
    """Set the default torch floating point type used by asymptolab.

    :param float_bits: Length of float numbers. Either 32 (float) or 64 (double); defaults to 64.
    :type float_bits: int

    .. note::
        Complex tensors created from real ones follow the default dtype,
        so 64 bits gives ``complex128`` everywhere.
    """
    if not isinstance(float_bits, int):
        raise ValueError(f"float_bits must be int, got {type(float_bits)}")
    if float_bits == 32:
        torch.set_default_dtype(torch.float32)
    elif float_bits == 64:
        torch.set_default_dtype(torch.float64)
    else:
        raise ValueError(f"float_bits must be 32 or 64, got {float_bits}")


def safe_mkdir(path):
    Path(path).mkdir(parents=True, exist_ok=True)


def wrap_angle(theta):
    r"""Normalize angles into :math:`(-\pi, \pi]`.

    :param theta: Angle(s) in radians.
    :type theta: float or `numpy.ndarray`
    :return: The normalized angle(s), same shape as ``theta``.
    :rtype: float or `numpy.ndarray`
    """
    theta = np.asarray(theta, dtype=float)
    wrapped = theta - 2 * np.pi * np.ceil((theta - np.pi) / (2 * np.pi))
    return wrapped if wrapped.ndim else float(wrapped)


def arg_distance(a, b):
    """Absolute angular distance between two directions, in :math:`[0, \\pi]`."""
    return np.abs(wrap_angle(np.asarray(a, dtype=float) - np.asarray(b, dtype=float)))


def to_complex_tensor(x):
    """Convert numbers, arrays or tensors to a ``complex128`` tensor."""
    if isinstance(x, torch.Tensor):
        return x.to(torch.complex128)
    return torch.as_tensor(np.asarray(x, dtype=complex), dtype=torch.complex128)


def config_hash(mapping):
    """SHA-256 of the canonical JSON dump of a configuration mapping."""
    payload = json.dumps(mapping, sort_keys=True, separators=(',', ':'), default=str)
    return hashlib.sha256(payload.encode('utf-8')).hexdigest()


def split_complex(prefix, values):
    """Columns ``{prefix}_re`` and ``{prefix}_im`` for a complex array."""
    values = np.asarray(values, dtype=complex)
    return {f'{prefix}_re': values.real, f'{prefix}_im': values.imag}


def write_csv(frame, path, config_sha256=None, float_format='%.17g'):
    r"""Write a data frame to CSV atomically.

    The file is written to a temporary sibling first and moved into place,
    so concurrent jobs never see half-written files.

    :param frame: The table to write; its columns become the header row.
    :type frame: `pandas.DataFrame`
    :param path: Destination path; parent directories are created.
    :type path: str or `pathlib.Path`
    :param config_sha256: Hash recorded on a leading ``#`` comment line, if given.
    :type config_sha256: str, optional
    :param float_format: Format for floats, defaults to full round-trip precision.
    :type float_format: str
    :return: The destination path.
    :rtype: `pathlib.Path`
    """
    path = Path(path)
    safe_mkdir(path.parent)
    fd, tmp = tempfile.mkstemp(dir=path.parent, prefix=f'.{path.name}.', suffix='.tmp')
    try:
        with os.fdopen(fd, 'w', newline='') as f:
            if config_sha256:
                f.write(f'# config_sha256={config_sha256}\n')
            frame.to_csv(f, index=False, float_format=float_format)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.remove(tmp)
        raise
    return path


def read_csv(path):
    """Read a CSV written by :func:`write_csv`, skipping comment lines."""
    return pd.read_csv(path, comment='#')
