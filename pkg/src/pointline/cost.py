"""Composable cost functions ``cost(A, q) = f(lip(D(a_1, q)), ..., lip(D(a_n, q)))``.

``D`` is the l_z distance between a moved point and its line, ``lip`` is a
non-decreasing r-log-Lipschitz map applied per pair, and ``f`` is a
non-decreasing s-log-Lipschitz aggregate. Any alignment that is within a factor
``c`` of a reference on every pair is then within ``c**(r*s)`` on the cost.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Union

import numpy as np

from .errors import PointLineError
from .geometry import Alignment, PairSet

# ---------------------------------------------------------------- per-pair maps


@dataclass(frozen=True)
class Power:
    """x -> x**r."""

    r: float = 1.0

    def __post_init__(self):
        if not (self.r >= 0 and math.isfinite(self.r)):
            raise PointLineError(f"power exponent must be finite and >= 0, got {self.r}")

    @property
    def exponent(self) -> float:
        return float(self.r)

    def __call__(self, x):
        x = np.asarray(x, dtype=float)
        if self.r == 1:
            return x
        return x**self.r


@dataclass(frozen=True)
class Threshold:
    """The hard-threshold M-estimator x -> min(x, th)."""

    th: float = 10.0

    def __post_init__(self):
        if not self.th > 0:
            raise PointLineError(f"threshold must be > 0, got {self.th}")

    @property
    def exponent(self) -> float:
        return 1.0

    def __call__(self, x):
        return np.minimum(np.asarray(x, dtype=float), self.th)


LipSpec = Union[Power, Threshold]

# ------------------------------------------------------------------ aggregates


@dataclass(frozen=True)
class Sum:
    exponent: float = field(default=1.0, init=False)

    def __call__(self, v, weights=None):
        v = np.asarray(v, dtype=float)
        if weights is None:
            return float(v.sum())
        return float(np.asarray(weights, dtype=float) @ v)


@dataclass(frozen=True)
class Max:
    exponent: float = field(default=1.0, init=False)

    def __call__(self, v, weights=None):
        if weights is not None:
            raise PointLineError("weights are only supported with the sum aggregate")
        return float(np.max(v))


@dataclass(frozen=True)
class TrimmedSum:
    """Sum of the ``n - k`` smallest entries (the ``k`` largest are treated as outliers)."""

    k: int = 0
    exponent: float = field(default=1.0, init=False)

    def __post_init__(self):
        if int(self.k) != self.k or self.k < 0:
            raise PointLineError(f"trim count must be a non-negative integer, got {self.k}")

    def __call__(self, v, weights=None):
        if weights is not None:
            raise PointLineError("weights are only supported with the sum aggregate")
        v = np.asarray(v, dtype=float)
        keep = len(v) - int(self.k)
        if keep <= 0:
            return 0.0
        if self.k == 0:
            return float(v.sum())
        return float(np.partition(v, keep - 1)[:keep].sum())


OuterSpec = Union[Sum, Max, TrimmedSum]


@dataclass(frozen=True)
class CostSpec:
    z: float = 2.0
    lip: LipSpec = field(default_factory=Power)
    outer: OuterSpec = field(default_factory=Sum)

    def __post_init__(self):
        if not self.z >= 1:
            raise PointLineError(f"z must be >= 1, got {self.z}")

    @property
    def r(self) -> float:
        return self.lip.exponent

    @property
    def s(self) -> float:
        return self.outer.exponent

    # -- JSON
    def to_dict(self) -> dict:
        lip = (
            {"kind": "power", "r": self.lip.r}
            if isinstance(self.lip, Power)
            else {"kind": "threshold", "th": self.lip.th}
        )
        if isinstance(self.outer, TrimmedSum):
            outer = {"kind": "trimmed", "k": int(self.outer.k)}
        else:
            outer = {"kind": "sum" if isinstance(self.outer, Sum) else "max"}
        z = "inf" if math.isinf(self.z) else self.z
        return {"z": z, "lip": lip, "outer": outer}

    @classmethod
    def from_dict(cls, d: dict) -> "CostSpec":
        try:
            z = float(d.get("z", 2.0))
            lip_d = d.get("lip", {"kind": "power", "r": 1.0})
            kind = lip_d["kind"]
            if kind == "power":
                lip = Power(float(lip_d.get("r", 1.0)))
            elif kind == "threshold":
                lip = Threshold(float(lip_d["th"]))
            else:
                raise PointLineError(f"unknown lip kind {kind!r}")
            outer_d = d.get("outer", {"kind": "sum"})
            kind = outer_d["kind"]
            if kind == "sum":
                outer = Sum()
            elif kind == "max":
                outer = Max()
            elif kind == "trimmed":
                outer = TrimmedSum(int(outer_d.get("k", 0)))
            else:
                raise PointLineError(f"unknown outer kind {kind!r}")
        except (KeyError, TypeError, ValueError) as exc:
            if isinstance(exc, PointLineError):
                raise
            raise PointLineError(f"malformed cost spec: {exc}") from exc
        return cls(z, lip, outer)


MIN_HUBER = CostSpec(2.0, Threshold(10.0), Sum())


def evaluate_cost(A: PairSet, a: Alignment, spec: CostSpec = CostSpec(), weights=None) -> float:
    if len(A) == 0:
        raise PointLineError("cost of an empty pair set is undefined")
    return spec.outer(spec.lip(A.distances(a, spec.z)), weights)


def approx_factor(spec: CostSpec) -> float:
    w = 1.0 if spec.z == 2 else math.sqrt(2.0)
    return (w * 16.0) ** (spec.r * spec.s)


def log_lipschitz_check(h, r: float, samples: int = 64, seed: int = 0) -> bool:
    """Sampled test of ``h(c x) <= c**r h(x)`` for ``c`` in [1, 100].

    ``h`` is either a per-pair map (scalar argument) or an aggregate (vector argument).
    """
    if samples < 1:
        raise PointLineError("samples must be >= 1")
    cs = np.concatenate([[1.0, 2.0], np.geomspace(1.0, 100.0, samples)])
    if isinstance(h, (Sum, Max, TrimmedSum)):
        rng = np.random.default_rng(seed)
        dim = max(int(getattr(h, "k", 0)) + 3, 5)
        vecs = [np.ones(dim)] + [rng.exponential(size=dim) * 10 ** rng.uniform(-3, 3) for _ in range(samples)]
        for v in vecs:
            fv = h(v)
            for c in cs:
                if h(c * v) > c**r * fv * (1 + 1e-9):
                    return False
        return True
    xs = np.concatenate([[0.0, 1.0], np.geomspace(1e-6, 1e6, samples)])
    for c in cs:
        if np.any(h(c * xs) > c**r * h(xs) * (1 + 1e-9)):
            return False
    return True


def kernel_codes(spec: CostSpec) -> tuple[int, float, int, int]:
    """``(lip_kind, lip_param, outer_kind, trim_k)`` as understood by the batch kernels."""
    if isinstance(spec.lip, Power):
        lip = (0, float(spec.lip.r))
    else:
        lip = (1, float(spec.lip.th))
    if isinstance(spec.outer, Sum):
        outer = (0, 0)
    elif isinstance(spec.outer, Max):
        outer = (1, 0)
    else:
        outer = (2, int(spec.outer.k))
    return lip + outer
