"""Small input-validation helpers used by the public entry points."""

import math
from numbers import Integral, Real

from .errors import ConfigError


def check_tokens(tokens, name="tokens", allow_empty=False):
    """Return ``tokens`` as a tuple of strings.

    Accepts a whitespace-separated string or any iterable of strings.
    """
    if isinstance(tokens, str):
        out = tuple(tokens.split())
    else:
        out = tuple(tokens)
        for tok in out:
            if not isinstance(tok, str) or not tok or any(c.isspace() for c in tok):
                raise ValueError(f"{name} must contain non-empty whitespace-free strings, got {tok!r}")
    if not out and not allow_empty:
        raise ValueError(f"{name} must not be empty")
    return out


def check_probability(value, name):
    if not isinstance(value, Real) or math.isnan(value) or not 0.0 <= value <= 1.0:
        raise ConfigError(f"{name} must be a probability in [0, 1], got {value!r}")
    return float(value)


def check_positive_int(value, name, minimum=1):
    if isinstance(value, bool) or not isinstance(value, Integral) or value < minimum:
        raise ConfigError(f"{name} must be an integer >= {minimum}, got {value!r}")
    return int(value)


def check_non_negative(value, name):
    if not isinstance(value, Real) or math.isnan(value) or value < 0:
        raise ConfigError(f"{name} must be >= 0, got {value!r}")
    return float(value)


def check_is_fitted(estimator, attributes):
    """Raise ``sklearn.exceptions.NotFittedError`` if any attribute is missing."""
    from sklearn.exceptions import NotFittedError

    if isinstance(attributes, str):
        attributes = [attributes]
    missing = [a for a in attributes if getattr(estimator, a, None) is None]
    if missing:
        raise NotFittedError(
            f"This {type(estimator).__name__} instance is not fitted yet; call 'fit' first."
        )
