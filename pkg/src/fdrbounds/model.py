"""Model tuples ``(P_n, f)``: base-vector samplers and signal transforms.

Every model draws a base vector ``W`` and reports statistics ``X`` with
``X_i = W_i`` on nulls and ``X_i = f(W_i)`` on signals, where ``f`` is
non-decreasing and ``f(w) >= w`` on the support of ``W``.

Five families are supported:

``iid_location``  ``W`` iid N(0, 1), ``f(w) = w + mu``
``iid_scale``     ``W`` iid |N(0, 1)|, ``f(w) = sigma * w``
``spiked``        Gaussian with equicorrelated null and signal blocks, ``f(w) = w + mu``
``grouped``       each signal shares its value with ``group_size`` nulls, ``f(w) = w + mu``
``lehmann``       ``W`` iid U(0, 1), ``f(w) = 1 - (1 - w)**(1/gamma)``; ``p = 1 - x``
"""

import json
import math
from dataclasses import asdict, dataclass, field
from enum import Enum

import numpy as np

from . import _rng
from ._validation import check_count, check_real
from .exceptions import DomainError, ParameterError


class Family(str, Enum):
    IID_LOCATION = "iid_location"
    IID_SCALE = "iid_scale"
    SPIKED = "spiked"
    GROUPED = "grouped"
    LEHMANN = "lehmann"

    @property
    def is_location(self):
        return self in (Family.IID_LOCATION, Family.SPIKED, Family.GROUPED)


SPEC_KEYS = (
    "family", "n", "m", "mu", "sigma", "gamma",
    "rho0", "rho1", "rhoc", "cross_sign", "group_size",
)


@dataclass(frozen=True)
class ModelSpec:
    """One model tuple: a family tag plus its parameters.

    Parameters irrelevant to the chosen family keep their defaults and are
    ignored by the samplers.
    """

    family: Family
    n: int
    m: int
    mu: float = 0.0
    sigma: float = 1.0
    gamma: float = 0.5
    rho0: float = 0.0
    rho1: float = 0.0
    rhoc: float = 0.0
    cross_sign: int = 1
    group_size: int = 1

    def __post_init__(self):
        try:
            family = Family(self.family)
        except ValueError:
            raise ParameterError(f"unknown family {self.family!r}") from None
        object.__setattr__(self, "family", family)
        n = check_count(self.n, "n", minimum=2)
        m = check_count(self.m, "m", minimum=1)
        if m >= n:
            raise ParameterError(f"need 1 <= m < n, got m={m}, n={n}")
        object.__setattr__(self, "n", n)
        object.__setattr__(self, "m", m)
        object.__setattr__(self, "mu", check_real(self.mu, "mu", 0.0))
        object.__setattr__(self, "sigma", check_real(self.sigma, "sigma", 1.0))
        object.__setattr__(
            self, "gamma", check_real(self.gamma, "gamma", 0.0, 1.0, True, True)
        )
        for name in ("rho0", "rho1", "rhoc"):
            object.__setattr__(
                self, name, check_real(getattr(self, name), name, 0.0, 1.0, high_open=True)
            )
        if self.cross_sign not in (1, -1) or isinstance(self.cross_sign, bool):
            raise ParameterError(f"cross_sign must be +1 or -1, got {self.cross_sign!r}")
        object.__setattr__(self, "cross_sign", int(self.cross_sign))
        object.__setattr__(self, "group_size", check_count(self.group_size, "group_size", 1))
        if family is Family.SPIKED and self.rhoc > min(self.rho0, self.rho1):
            raise ParameterError(
                f"spiked model needs rhoc <= min(rho0, rho1), got rhoc={self.rhoc}, "
                f"rho0={self.rho0}, rho1={self.rho1}"
            )
        if family is Family.GROUPED:
            _check_groups(n, m, self.group_size)

    @classmethod
    def rare_weak(cls, n, s, r, family=Family.IID_LOCATION, **params):
        """Spec with ``m = round(n**(1 - s))`` signals and shift ``mu = sqrt(2 r log n)``."""
        m = max(1, int(round(n ** (1.0 - s))))
        return cls(family=family, n=n, m=m, mu=math.sqrt(2.0 * r * math.log(n)), **params)

    def to_dict(self):
        d = asdict(self)
        d["family"] = self.family.value
        return d

    @classmethod
    def from_dict(cls, d):
        if not isinstance(d, dict):
            raise ParameterError(f"model spec must be a JSON object, got {type(d).__name__}")
        unknown = sorted(set(d) - set(SPEC_KEYS))
        if unknown:
            raise ParameterError(f"unknown model key(s): {', '.join(unknown)}")
        for required in ("family", "n", "m"):
            if required not in d:
                raise ParameterError(f"model spec is missing required key {required!r}")
        return cls(**d)

    def to_json(self):
        return json.dumps(self.to_dict(), sort_keys=True)

    @classmethod
    def from_json(cls, text):
        return cls.from_dict(json.loads(text))


def _check_groups(n, m, group_size):
    if group_size > min(m, n / m):
        raise ParameterError(
            f"group_size must satisfy 1 <= A <= min(m, n/m); got A={group_size}, m={m}, n={n}"
        )
    if m * (1 + group_size) > n:
        raise ParameterError(
            f"grouped layout needs m*(1+A) <= n indices; got m={m}, A={group_size}, n={n}"
        )


@dataclass(frozen=True, eq=False)
class SignalLayout:
    """Index partition into nulls and signals, with optional null groups.

    ``groups`` maps a signal index to the null indices that copy its value.
    """

    nulls: np.ndarray
    signals: np.ndarray
    groups: dict = field(default=None)

    @property
    def n(self):
        return len(self.nulls) + len(self.signals)

    @property
    def m(self):
        return len(self.signals)

    @property
    def signal_mask(self):
        mask = np.zeros(self.n, dtype=bool)
        mask[self.signals] = True
        return mask

    @property
    def independent_nulls(self):
        if not self.groups:
            return self.nulls
        grouped = np.concatenate(list(self.groups.values()))
        return np.setdiff1d(self.nulls, grouped)

    def __eq__(self, other):
        if not isinstance(other, SignalLayout):
            return NotImplemented
        if not (np.array_equal(self.nulls, other.nulls)
                and np.array_equal(self.signals, other.signals)):
            return False
        mine, theirs = self.groups or {}, other.groups or {}
        return mine.keys() == theirs.keys() and all(
            np.array_equal(mine[k], theirs[k]) for k in mine
        )


def build_layout(n, m, family=Family.IID_LOCATION, group_size=1):
    """Place signals at the first ``m`` indices.

    For the grouped family the next ``m * group_size`` indices are handed
    out to the signals in order, ``group_size`` at a time.
    """
    family = Family(family)
    n = check_count(n, "n", minimum=2)
    m = check_count(m, "m", minimum=1)
    if m >= n:
        raise ParameterError(f"need 1 <= m < n, got m={m}, n={n}")
    signals = np.arange(m)
    nulls = np.arange(m, n)
    groups = None
    if family is Family.GROUPED:
        group_size = check_count(group_size, "group_size", minimum=1)
        _check_groups(n, m, group_size)
        groups = {
            g: np.arange(m + g * group_size, m + (g + 1) * group_size) for g in range(m)
        }
    return SignalLayout(nulls=nulls, signals=signals, groups=groups)


def layout_for(spec):
    return build_layout(spec.n, spec.m, spec.family, spec.group_size)


def sample_base(spec, layout, rng, size=None):
    """Draw the base vector ``W``; ``size`` prepends a replicate axis."""
    shape = (spec.n,) if size is None else (size, spec.n)
    family = spec.family
    if family is Family.IID_LOCATION:
        return rng.standard_normal(shape)
    if family is Family.IID_SCALE:
        return np.abs(rng.standard_normal(shape))
    if family is Family.LEHMANN:
        return rng.random(shape)
    if family is Family.SPIKED:
        lead = shape[:-1] + (1,)
        u = rng.standard_normal(shape)
        v0 = rng.standard_normal(lead)
        v1 = rng.standard_normal(lead)
        vc = rng.standard_normal(lead)
        w = np.empty(shape)
        nulls, signals = layout.nulls, layout.signals
        w[..., nulls] = (
            math.sqrt(1.0 - spec.rho0) * u[..., nulls]
            + math.sqrt(spec.rho0 - spec.rhoc) * v0
            + math.sqrt(spec.rhoc) * vc
        )
        w[..., signals] = (
            math.sqrt(1.0 - spec.rho1) * u[..., signals]
            + math.sqrt(spec.rho1 - spec.rhoc) * v1
            + spec.cross_sign * math.sqrt(spec.rhoc) * vc
        )
        return w
    if family is Family.GROUPED:
        w = rng.standard_normal(shape)
        for g, members in layout.groups.items():
            w[..., members] = w[..., g : g + 1]
        return w
    raise ParameterError(f"unsupported family {family!r}")


def transform_f(spec, w):
    """Signal transform ``f`` applied elementwise."""
    w = np.asarray(w, dtype=np.float64)
    family = spec.family
    if family.is_location:
        out = w + spec.mu
    elif family is Family.IID_SCALE:
        out = spec.sigma * w
    else:
        if np.any((w < 0.0) | (w >= 1.0)):
            raise DomainError("Lehmann transform needs w in [0, 1)")
        out = 1.0 - (1.0 - w) ** (1.0 / spec.gamma)
    return out[()] if out.ndim == 0 else out


def apply_alternative(spec, w, layout):
    """Statistics ``X``: ``W`` on nulls and ``f(W)`` on signals."""
    w = np.asarray(w, dtype=np.float64)
    if w.shape[-1] != layout.n or layout.n != spec.n:
        raise ParameterError(
            f"length mismatch: w has {w.shape[-1]} entries, layout {layout.n}, spec {spec.n}"
        )
    x = w.copy()
    x[..., layout.signals] = transform_f(spec, w[..., layout.signals])
    return x


@dataclass(frozen=True, eq=False)
class SampleBatch:
    w: np.ndarray
    x: np.ndarray
    layout: SignalLayout
    replicate_index: int


def sample_batch(spec, layout, seed, replicate=0):
    """Replicate ``replicate`` of the proxy stream for ``seed``."""
    rng = _rng.substream(_rng.check_seed(seed), _rng.PROXY_STREAM, replicate)
    w = sample_base(spec, layout, rng)
    return SampleBatch(w=w, x=apply_alternative(spec, w, layout), layout=layout,
                       replicate_index=replicate)


def sample_block(spec, layout, seed, stream, start, stop):
    """Base vectors for replicates ``start..stop-1``, one substream each."""
    w = np.empty((stop - start, spec.n))
    for i, r in enumerate(range(start, stop)):
        w[i] = sample_base(spec, layout, _rng.substream(seed, stream, r))
    return w
