"""Synthetic instances, solver registry, experiment sweeps and the coreset pipeline."""
from __future__ import annotations

import math
import platform
import statistics
import sys
import time
from concurrent.futures import ThreadPoolExecutor
from dataclasses import asdict, dataclass

import numpy as np

from .align import solve_exhaustive
from .baselines import RansacConfig, adaptive_ransac, fast_approx_align, lms_align
from .coreset import DEFAULT_C, SparseWeights, WeightedPairSet, build_coreset
from .cost import MIN_HUBER, CostSpec, Power, Sum, evaluate_cost
from .errors import PointLineError
from .geometry import Alignment, PairSet


@dataclass(frozen=True)
class GenConfig:
    n: int = 50
    k: float = 0.0
    r: float = 200.0
    noise_mean: float = 0.5
    noise_std: float = 0.5
    seed: int = 0
    shuffle: bool = False

    def __post_init__(self):
        if self.n < 3:
            raise PointLineError("n must be >= 3")
        if not 0.0 <= self.k <= 1.0:
            raise PointLineError("outlier fraction must lie in [0, 1]")
        if self.r < 0 or self.noise_std < 0:
            raise PointLineError("noise scales must be >= 0")

    @property
    def n_outliers(self) -> int:
        # round half up so k*n = x.5 is unambiguous
        return int(math.floor(self.k * self.n + 0.5))


@dataclass
class Instance:
    """A generated problem.

    ``motion`` is the rigid motion applied to points lying on their lines, so the
    ground-truth solution is ``planted = motion.inverse()``. ``planted_perm`` maps
    point ``i`` to its true line index (identity unless shuffled).
    """

    pairs: PairSet
    motion: Alignment
    planted_perm: np.ndarray
    outlier_mask: np.ndarray
    config: GenConfig

    @property
    def planted(self) -> Alignment:
        return self.motion.inverse()

    @property
    def matched(self) -> PairSet:
        return self.pairs.rematch(self.planted_perm)


def _random_normals(rng, n):
    V = rng.normal(0.5, 0.5, size=(n, 2))
    norms = np.hypot(V[:, 0], V[:, 1])
    bad = norms < 1e-9
    while bad.any():
        V[bad] = rng.normal(0.5, 0.5, size=(int(bad.sum()), 2))
        norms = np.hypot(V[:, 0], V[:, 1])
        bad = norms < 1e-9
    return V / norms[:, None]


def gen_instance(cfg: GenConfig) -> Instance:
    rng = np.random.default_rng(cfg.seed)
    n = cfg.n
    V = _random_normals(rng, n)
    b = rng.uniform(0.0, 10.0, size=n)
    P0 = rng.uniform(0.0, 100.0, size=(n, 2))
    P1 = P0 - ((V * P0).sum(axis=1) - b)[:, None] * V
    theta = rng.uniform(0.0, 2 * math.pi)
    t = rng.uniform(0.0, 10.0, size=2)
    # forward motion p -> R p + t, i.e. the alignment (R, -t)
    motion = Alignment.from_angle(theta, -t)
    P2 = motion.apply(P1)
    P2 = P2 + rng.normal(cfg.noise_mean, cfg.noise_std, size=(n, 2))
    mask = np.zeros(n, dtype=bool)
    m = cfg.n_outliers
    if m:
        out = rng.choice(n, size=m, replace=False)
        mask[out] = True
        P2[out] += rng.normal(cfg.r / 2, cfg.r / 2, size=(m, 2))
    perm = np.arange(n)
    if cfg.shuffle:
        sigma = rng.permutation(n)
        V, b = V[sigma], b[sigma]
        perm = np.argsort(sigma)
    return Instance(PairSet(P2, V, b), motion, perm, mask, cfg)


# ------------------------------------------------------------------ solvers


def _solve_exact(A, spec, seed):
    return solve_exhaustive(A, spec).alignment


# draws used by the "coreset" solver tag; the exhaustive search on the coreset is
# quartic in its size, so the eps-derived size is only practical via coreset_pipeline
CORESET_SOLVER_SIZE = 64


def _solve_coreset(A, spec, seed):
    return coreset_pipeline(A, 0.1, 0.1, rng=seed, size=CORESET_SOLVER_SIZE)[0]


SOLVERS = {
    "lms": lambda A, spec, seed: lms_align(A),
    "ransac-lms": lambda A, spec, seed: adaptive_ransac(A, "lms", RansacConfig(seed=seed)),
    "ransac-approx": lambda A, spec, seed: adaptive_ransac(A, "approx", RansacConfig(seed=seed)),
    "approx": lambda A, spec, seed: fast_approx_align(A, spec, rng=seed),
    "exact": _solve_exact,
    "coreset": _solve_coreset,
}


def solve(A: PairSet, solver: str, spec: CostSpec = MIN_HUBER, seed: int | None = 0) -> Alignment:
    try:
        fn = SOLVERS[solver]
    except KeyError:
        raise PointLineError(f"unknown solver {solver!r}; choose from {sorted(SOLVERS)}") from None
    return fn(A, spec, seed)


def _check_solvers(solvers):
    solvers = list(solvers)
    if not solvers:
        raise PointLineError("at least one solver is required")
    for s in solvers:
        if s not in SOLVERS:
            raise PointLineError(f"unknown solver {s!r}; choose from {sorted(SOLVERS)}")
    return solvers


def cell_seed(seed: int, *parts) -> int:
    ints = [int(seed)] + [int(round(p * 1_000_000)) if isinstance(p, float) else int(p) for p in parts]
    return int(np.random.SeedSequence(ints).generate_state(1)[0])


def _run_cells(cells, fn, threads):
    if threads and threads > 1:
        with ThreadPoolExecutor(threads) as ex:
            return list(ex.map(fn, cells))
    return [fn(c) for c in cells]


def run_error_sweep(
    n: int = 50,
    ks=(0.1, 0.3, 0.5),
    solvers=("lms", "approx"),
    repeats: int = 10,
    seed: int = 0,
    spec: CostSpec = MIN_HUBER,
    threads: int = 1,
    **gen_kwargs,
) -> list[dict]:
    """Cost of each solver's output (under ``spec``, on the full noisy set) per (k, repeat)."""
    solvers = _check_solvers(solvers)
    cells = [(k, rep, s) for k in ks for rep in range(repeats) for s in solvers]

    def one(cell):
        k, rep, s = cell
        inst = gen_instance(GenConfig(n=n, k=float(k), seed=cell_seed(seed, n, float(k), rep), **gen_kwargs))
        a = solve(inst.pairs, s, spec, seed=cell_seed(seed, n, float(k), rep, 1))
        return {"solver": s, "n": n, "k": float(k), "repeat": rep, "value": evaluate_cost(inst.pairs, a, spec)}

    return _run_cells(cells, one, threads)


def run_time_sweep(
    ns=(50, 100, 200),
    solvers=("approx",),
    repeats: int = 3,
    seed: int = 0,
    k: float = 0.0,
    spec: CostSpec = MIN_HUBER,
    **gen_kwargs,
) -> list[dict]:
    """Wall-clock seconds per solve. A warm-up run per solver is discarded."""
    solvers = _check_solvers(solvers)
    rows = []
    for s in solvers:
        warm = gen_instance(GenConfig(n=max(3, min(ns)), seed=seed))
        solve(warm.pairs, s, spec, seed=seed)
        for n in ns:
            for rep in range(repeats):
                inst = gen_instance(GenConfig(n=n, k=k, seed=cell_seed(seed, n, k, rep), **gen_kwargs))
                t0 = time.perf_counter()
                solve(inst.pairs, s, spec, seed=cell_seed(seed, n, k, rep, 1))
                rows.append({"solver": s, "n": n, "k": float(k), "repeat": rep, "value": time.perf_counter() - t0})
    return rows


def summarize(rows) -> list[dict]:
    """Mean, standard deviation and median per (solver, n, k)."""
    groups: dict = {}
    for r in rows:
        groups.setdefault((r["solver"], r["n"], r["k"]), []).append(float(r["value"]))
    out = []
    for (s, n, k), vals in groups.items():
        out.append(
            {
                "solver": s,
                "n": n,
                "k": k,
                "count": len(vals),
                "mean": statistics.fmean(vals),
                "std": statistics.stdev(vals) if len(vals) > 1 else 0.0,
                "median": statistics.median(vals),
            }
        )
    return out


def loglog_slope(xs, ys) -> float:
    x = np.log(np.asarray(xs, dtype=float))
    y = np.log(np.asarray(ys, dtype=float))
    return float(np.polyfit(x, y, 1)[0])


# ------------------------------------------------------------ coreset path


def coreset_pipeline(
    A: PairSet | WeightedPairSet,
    eps: float = 0.1,
    delta: float = 0.1,
    spec: CostSpec = CostSpec(),
    c: float = DEFAULT_C,
    rng=None,
    size: int | None = None,
) -> tuple[Alignment, float, SparseWeights]:
    """Compress, search candidates on the weighted coreset, report the full-set cost.

    Only the Euclidean sum of distances is supported since that is what the
    coreset preserves.
    """
    if not (spec.z == 2 and isinstance(spec.lip, Power) and spec.lip.r == 1 and isinstance(spec.outer, Sum)):
        raise PointLineError("the coreset pipeline supports only z=2, Power(1), Sum")
    W = A if isinstance(A, WeightedPairSet) else WeightedPairSet(A)
    sw = build_coreset(W, eps, delta, c, size=size, rng=rng)
    core = sw.apply(W)
    if len(core) < 3:
        raise PointLineError("coreset has fewer than 3 pairs; lower eps or raise c")
    a = solve_exhaustive(core.pairs, spec, weights=core.weights).alignment
    return a, W.cost(a), sw


# ---------------------------------------------------------------- manifest


def versions() -> dict:
    from importlib.metadata import PackageNotFoundError, version

    from . import __version__

    def _v(name):
        try:
            return version(name)
        except PackageNotFoundError:
            return None

    return {
        "pointline": __version__,
        "python": sys.version.split()[0],
        "numpy": np.__version__,
        "numba": _v("numba"),
        "click": _v("click"),
        "platform": platform.platform(),
    }


def manifest(command: str, config: dict, seed) -> dict:
    from .kernels import backend_name

    cfg = {k: (asdict(v) if hasattr(v, "__dataclass_fields__") else v) for k, v in config.items()}
    return {"command": command, "seed": seed, "config": cfg, "backend": backend_name(), "versions": versions()}
