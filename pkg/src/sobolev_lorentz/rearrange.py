"""Distribution functions, decreasing rearrangements and maximal functions.

Everything here works on piecewise-constant carriers: a :class:`StepFunction`
is a finite list of ``(value, measure)`` pieces, i.e. a nonnegative function
equal to ``value`` on a set of the given measure and 0 elsewhere.  Because the
ambient measure never enters the formulas (only the distribution function
does), it is not stored.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from typing import Iterable, Sequence

import numpy as np

__all__ = [
    "StepFunction",
    "SampledGrid",
    "distribution",
    "rearrangement",
    "rearranged_value",
    "maximal_function",
    "rearrange_sampled",
]


def _readonly(a: np.ndarray) -> np.ndarray:
    a.setflags(write=False)
    return a


@dataclass(frozen=True, eq=False)
class StepFunction:
    """Nonnegative step function given by ``(value, measure)`` pieces.

    Pieces are stored in the order given; :func:`rearrangement` produces the
    canonical form (values strictly decreasing, zero values dropped, exactly
    equal values merged).
    """

    values: np.ndarray
    measures: np.ndarray

    def __post_init__(self):
        v = np.array(self.values, dtype=float).reshape(-1)
        m = np.array(self.measures, dtype=float).reshape(-1)
        if v.shape != m.shape:
            raise ValueError("values and measures must have the same length")
        if not (np.all(np.isfinite(v)) and np.all(np.isfinite(m))):
            raise ValueError("values and measures must be finite")
        if np.any(v < 0):
            raise ValueError("step function values must be nonnegative")
        if np.any(m <= 0):
            raise ValueError("piece measures must be positive")
        object.__setattr__(self, "values", _readonly(v))
        object.__setattr__(self, "measures", _readonly(m))

    @classmethod
    def from_pieces(cls, pieces: Iterable[Sequence[float]]) -> "StepFunction":
        pieces = [tuple(pc) for pc in pieces]
        if any(len(pc) != 2 for pc in pieces):
            raise ValueError("each piece must be a (value, measure) pair")
        if not pieces:
            return cls(np.empty(0), np.empty(0))
        v, m = zip(*pieces)
        return cls(np.asarray(v, dtype=float), np.asarray(m, dtype=float))

    @classmethod
    def indicator(cls, measure: float, value: float = 1.0) -> "StepFunction":
        return cls(np.array([value]), np.array([measure]))

    @property
    def pieces(self) -> list[tuple[float, float]]:
        return [(float(v), float(m)) for v, m in zip(self.values, self.measures)]

    def __len__(self) -> int:
        return self.values.size

    def __eq__(self, other) -> bool:
        if not isinstance(other, StepFunction):
            return NotImplemented
        return np.array_equal(self.values, other.values) and np.array_equal(
            self.measures, other.measures
        )

    def __repr__(self) -> str:
        return f"StepFunction({self.pieces!r})"

    @property
    def is_canonical(self) -> bool:
        v = self.values
        return bool(np.all(v > 0) and np.all(np.diff(v) < 0))

    @property
    def is_zero(self) -> bool:
        return not np.any(self.values > 0)

    @property
    def total_measure(self) -> float:
        """Measure of the support (pieces with positive value)."""
        return float(self.measures[self.values > 0].sum())

    @property
    def integral(self) -> float:
        return float(self.values @ self.measures)

    def scale_values(self, c: float) -> "StepFunction":
        return StepFunction(self.values * c, self.measures)

    def scale_measures(self, s: float) -> "StepFunction":
        return StepFunction(self.values, self.measures * s)

    def power(self, alpha: float) -> "StepFunction":
        if alpha <= 0:
            raise ValueError("alpha must be positive")
        return StepFunction(self.values**alpha, self.measures)

    def to_json(self) -> dict:
        return {"pieces": [[v, m] for v, m in self.pieces]}

    @classmethod
    def from_json(cls, obj: dict) -> "StepFunction":
        if not isinstance(obj, dict) or "pieces" not in obj:
            raise ValueError('step function JSON must be an object with a "pieces" list')
        return cls.from_pieces(obj["pieces"])


@dataclass(frozen=True, eq=False)
class SampledGrid:
    """Cell values on a uniform grid in dimension 1 or 2; each cell has measure ``h**n``."""

    n: int
    h: float
    values: np.ndarray
    origin: tuple = field(default=None)

    def __post_init__(self):
        if self.n not in (1, 2):
            raise ValueError("grid dimension must be 1 or 2")
        if not self.h > 0:
            raise ValueError("cell size h must be positive")
        vals = np.array(self.values, dtype=float)
        if vals.ndim != self.n:
            raise ValueError(f"values must be a {self.n}-d array, got shape {vals.shape}")
        if vals.size < 1:
            raise ValueError("grid must have at least one cell")
        if not np.all(np.isfinite(vals)):
            raise ValueError("grid values must be finite")
        object.__setattr__(self, "values", _readonly(vals))
        origin = (0.0,) * self.n if self.origin is None else tuple(float(o) for o in self.origin)
        if len(origin) != self.n:
            raise ValueError("origin must have one entry per axis")
        object.__setattr__(self, "origin", origin)

    @property
    def shape(self) -> tuple:
        return self.values.shape

    @property
    def cell_measure(self) -> float:
        return self.h**self.n

    def to_json(self) -> dict:
        return {
            "n": self.n,
            "h": self.h,
            "values": self.values.ravel().tolist(),
            "shape": list(self.values.shape),
            "origin": list(self.origin),
        }

    @classmethod
    def from_json(cls, obj: dict) -> "SampledGrid":
        try:
            n = int(obj["n"])
            values = np.asarray(obj["values"], dtype=float)
            shape = tuple(obj.get("shape", values.shape))
            return cls(n, float(obj["h"]), values.reshape(shape), obj.get("origin"))
        except (KeyError, TypeError) as exc:
            raise ValueError(f"malformed sampled grid JSON: {exc}") from exc


def distribution(f: StepFunction, t: float) -> float:
    """Measure of the set where ``f > t`` (strict inequality)."""
    if t < 0:
        raise ValueError("distribution function is defined for t >= 0")
    return float(f.measures[f.values > t].sum())


def rearrangement(f: StepFunction) -> StepFunction:
    """Canonical decreasing rearrangement of ``f``.

    Zero-valued pieces are dropped and exactly equal values are merged; no
    tolerance is applied, so values from different computations stay separate.
    """
    keep = f.values > 0
    v, m = f.values[keep], f.measures[keep]
    if v.size == 0:
        return StepFunction(np.empty(0), np.empty(0))
    order = np.argsort(-v, kind="stable")
    v, m = v[order], m[order]
    starts = np.flatnonzero(np.r_[True, v[1:] != v[:-1]])
    return StepFunction(v[starts], np.add.reduceat(m, starts))


def _canonical(f: StepFunction) -> StepFunction:
    return f if f.is_canonical else rearrangement(f)


def _breakpoints(fstar: StepFunction) -> tuple[np.ndarray, np.ndarray]:
    """Cumulative measures ``T`` and integrals ``A = int_0^T f*`` at piece starts, length len+1."""
    T = np.concatenate(([0.0], np.cumsum(fstar.measures)))
    A = np.concatenate(([0.0], np.cumsum(fstar.values * fstar.measures)))
    return T, A


def rearranged_value(f: StepFunction, t):
    """Evaluate ``f*(t)``; right-continuous, 0 beyond the total measure."""
    fs = _canonical(f)
    t = np.asarray(t, dtype=float)
    if np.any(t < 0):
        raise ValueError("f* is defined for t >= 0")
    T, _ = _breakpoints(fs)
    idx = np.searchsorted(T, t, side="right") - 1
    vals = np.concatenate((fs.values, [0.0]))
    out = vals[np.minimum(idx, fs.values.size)]
    return float(out) if out.ndim == 0 else out


def maximal_function(fstar: StepFunction, t):
    """``f**(t) = (1/t) * int_0^t f*(s) ds``, exact on the step structure.

    Accepts a scalar or an array of ``t > 0``.  A non-canonical input is
    rearranged first.
    """
    fs = _canonical(fstar)
    t = np.asarray(t, dtype=float)
    if np.any(t <= 0):
        raise ValueError("maximal function is defined for t > 0")
    T, A = _breakpoints(fs)
    k = fs.values.size
    idx = np.minimum(np.searchsorted(T, t, side="right") - 1, k)
    vals = np.concatenate((fs.values, [0.0]))
    integral = A[idx] + vals[idx] * (t - T[idx])
    out = integral / t
    return float(out) if out.ndim == 0 else out


def rearrange_sampled(g: SampledGrid) -> StepFunction:
    """Rearrangement of ``|g|`` with each cell carrying measure ``h**n``."""
    vals = np.abs(g.values.ravel())
    return rearrangement(StepFunction(vals, np.full(vals.size, g.cell_measure)))
