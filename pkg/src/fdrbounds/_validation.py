"""Input validation helpers shared by the estimators and functional API."""

import numbers

import numpy as np
from sklearn.utils.validation import check_array

from .exceptions import ParameterError


def check_count(value, name, minimum=0, maximum=None):
    if isinstance(value, (bool, np.bool_)) or not isinstance(value, numbers.Integral):
        raise ParameterError(f"{name} must be an integer, got {value!r}")
    value = int(value)
    if value < minimum:
        raise ParameterError(f"{name} must be >= {minimum}, got {value}")
    if maximum is not None and value > maximum:
        raise ParameterError(f"{name} must be <= {maximum}, got {value}")
    return value


def check_real(value, name, low=None, high=None, low_open=False, high_open=False):
    """Validate a finite real scalar against an interval with optional open ends."""
    if isinstance(value, (bool, np.bool_)) or not isinstance(value, numbers.Real):
        raise ParameterError(f"{name} must be a real number, got {value!r}")
    value = float(value)
    if not np.isfinite(value):
        raise ParameterError(f"{name} must be finite, got {value}")
    if low is not None and (value < low or (low_open and value == low)):
        op = ">" if low_open else ">="
        raise ParameterError(f"{name} must be {op} {low}, got {value}")
    if high is not None and (value > high or (high_open and value == high)):
        op = "<" if high_open else "<="
        raise ParameterError(f"{name} must be {op} {high}, got {value}")
    return value


def check_epsilon(epsilon):
    """The analysis parameter lives in (0, 1/3)."""
    return check_real(epsilon, "epsilon", 0.0, 1.0 / 3.0, low_open=True, high_open=True)


def check_statistics(x, name="x", allow_2d=False):
    """Coerce a statistic vector (or replicate matrix) to a float ndarray."""
    x = np.asarray(x)
    if allow_2d and x.ndim == 2:
        return check_array(x, dtype=np.float64, ensure_all_finite=False, input_name=name)
    if x.ndim != 1:
        raise ParameterError(f"{name} must be one-dimensional, got shape {x.shape}")
    return check_array(
        x, ensure_2d=False, dtype=np.float64, ensure_all_finite=False, input_name=name
    )


def check_signal_mask(y, n):
    y = np.asarray(y)
    if y.shape != (n,):
        raise ParameterError(f"signal mask must have shape ({n},), got {y.shape}")
    if y.dtype != bool:
        if not np.isin(y, (0, 1)).all():
            raise ParameterError("signal mask must be boolean or 0/1")
        y = y.astype(bool)
    m = int(y.sum())
    if not 1 <= m < n:
        raise ParameterError(f"signal mask must mark 1 <= m < n signals, got m={m}, n={n}")
    return y
