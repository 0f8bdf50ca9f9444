"""Command-line interface.

Exit codes: 0 success, 2 invalid input, 3 numerical failure.
"""
from __future__ import annotations

import functools
import json
import sys
from pathlib import Path

import click
import numpy as np

from . import harness
from . import io as pio
from .coreset import DEFAULT_C, StreamState, WeightedPairSet, build_coreset, stream_coreset, stream_insert
from .cost import MIN_HUBER, CostSpec, evaluate_cost
from .errors import NumericalError, PointLineError
from .matching import Exact, Sampled, align_and_match

EXIT_INVALID = 2
EXIT_NUMERIC = 3


class _Ctx:
    def __init__(self, seed, threads, fmt):
        self.seed, self.threads, self.fmt = seed, threads, fmt


def _fail(msg: str, code: int):
    click.echo(f"error: {msg}", err=True)
    sys.exit(code)


def _guard(fn):
    """Map library exceptions to exit codes."""

    @functools.wraps(fn)
    def wrapper(*a, **kw):
        try:
            return fn(*a, **kw)
        except (PointLineError, json.JSONDecodeError, FileNotFoundError, IsADirectoryError) as exc:
            _fail(str(exc), EXIT_INVALID)
        except (NumericalError, FloatingPointError, np.linalg.LinAlgError) as exc:
            _fail(str(exc), EXIT_NUMERIC)

    return wrapper


def _write_manifest(output, command, config, seed):
    man = json.dumps(harness.manifest(command, config, seed), indent=1, default=str)
    if output in (None, "-"):
        click.echo(man, err=True)
    else:
        Path(str(output) + ".manifest.json").write_text(man + "\n")


def _load_spec(spec_arg) -> CostSpec:
    if spec_arg is None:
        return MIN_HUBER
    text = Path(spec_arg).read_text() if Path(spec_arg).exists() else spec_arg
    try:
        return CostSpec.from_dict(json.loads(text))
    except json.JSONDecodeError as exc:
        raise PointLineError(f"cost spec is neither a file nor valid JSON: {exc}") from exc


@click.group()
@click.option("--seed", type=int, default=0, show_default=True, help="Root random seed.")
@click.option("--threads", type=click.IntRange(1), default=1, show_default=True, help="Worker threads for sweeps.")
@click.option("--format", "fmt", type=click.Choice(["csv", "json"]), default="csv", show_default=True)
@click.pass_context
def main(ctx, seed, threads, fmt):
    """Align planar points to lines."""
    ctx.obj = _Ctx(seed, threads, fmt)


@main.command()
@click.option("-n", type=click.IntRange(3), default=50, show_default=True)
@click.option("-k", "--outliers", type=click.FloatRange(0, 1), default=0.0, show_default=True)
@click.option("--range", "r", type=float, default=200.0, show_default=True, help="Outlier noise scale.")
@click.option("--noise-mean", type=float, default=0.5, show_default=True)
@click.option("--noise-std", type=click.FloatRange(0), default=0.5, show_default=True)
@click.option("--shuffle", is_flag=True, help="Permute lines so the correspondence is unknown.")
@click.option("-o", "--output", default="-", help="Output file ('-' for stdout).")
@click.pass_obj
@_guard
def gen(obj, n, outliers, r, noise_mean, noise_std, shuffle, output):
    """Generate a synthetic instance."""
    cfg = harness.GenConfig(n, outliers, r, noise_mean, noise_std, obj.seed, shuffle)
    inst = harness.gen_instance(cfg)
    pio.write_text(output, pio.dumps_pairs(inst.pairs, fmt_name=obj.fmt))
    _write_manifest(
        output,
        "gen",
        {
            "gen": cfg,
            "planted": pio.alignment_to_dict(inst.planted),
            "planted_perm": inst.planted_perm.tolist(),
            "outliers": np.flatnonzero(inst.outlier_mask).tolist(),
        },
        obj.seed,
    )


def _read(obj, path):
    fmt = "json" if str(path).endswith(".json") else ("csv" if path != "-" else obj.fmt)
    return pio.read_pairs(path, fmt)


@main.command("solve")
@click.argument("instance")
@click.option("--solver", type=click.Choice(sorted(harness.SOLVERS)), default="exact", show_default=True)
@click.option("--spec", "spec_arg", default=None, help="Cost spec JSON (file or literal); default min-Huber th=10.")
@click.option("-o", "--output", default="-")
@click.pass_obj
@_guard
def solve_cmd(obj, instance, solver, spec_arg, output):
    """Solve an instance with known correspondences."""
    A, w = _read(obj, instance)
    spec = _load_spec(spec_arg)
    if w is not None and solver == "exact":
        from .align import solve_exhaustive

        a = solve_exhaustive(A, spec, weights=w).alignment
    else:
        a = harness.solve(A, solver, spec, seed=obj.seed)
    res = pio.alignment_to_dict(a)
    res["cost"] = evaluate_cost(A, a, spec, w if w is not None and solver == "exact" else None)
    res["solver"] = solver
    pio.write_text(output, json.dumps(res) + "\n")
    _write_manifest(output, "solve", {"instance": instance, "solver": solver, "spec": spec.to_dict()}, obj.seed)


@main.command("solve-unmatched")
@click.argument("instance")
@click.option("--mode", type=click.Choice(["exact", "sampled"]), default="exact", show_default=True)
@click.option("--budget", type=click.IntRange(1), default=1000, show_default=True)
@click.option("--cap", type=click.IntRange(3), default=8, show_default=True)
@click.option("--spec", "spec_arg", default=None)
@click.option("-o", "--output", default="-")
@click.pass_obj
@_guard
def solve_unmatched(obj, instance, mode, budget, cap, spec_arg, output):
    """Solve when the point-line correspondence is unknown."""
    A, _ = _read(obj, instance)
    spec = _load_spec(spec_arg)
    m = Exact(cap) if mode == "exact" else Sampled(budget, obj.seed)
    res = align_and_match(A, spec, m)
    pio.write_text(output, res.to_json() + "\n")
    _write_manifest(output, "solve-unmatched", {"instance": instance, "mode": mode, "budget": budget}, obj.seed)


@main.command("coreset")
@click.argument("instance")
@click.option("--eps", type=float, default=0.1, show_default=True)
@click.option("--delta", type=float, default=0.1, show_default=True)
@click.option("-c", "const", type=float, default=DEFAULT_C, show_default=True)
@click.option("--size", type=click.IntRange(1), default=None, help="Override the number of draws.")
@click.option("-o", "--output", default="-")
@click.pass_obj
@_guard
def coreset_cmd(obj, instance, eps, delta, const, size, output):
    """Compress an instance to a weighted coreset."""
    A, w = _read(obj, instance)
    W = WeightedPairSet(A, w)
    sw = build_coreset(W, eps, delta, const, size=size, rng=obj.seed)
    core = sw.apply(W)
    # input weights in w, coreset weights in u
    pio.write_text(output, pio.dumps_pairs(core.pairs, W.weights[sw.indices], obj.fmt, {"u": core.weights}))
    _write_manifest(
        output, "coreset", {"instance": instance, "eps": eps, "delta": delta, "c": const, "size": size}, obj.seed
    )


@main.command("stream")
@click.option("--eps", type=float, default=0.1, show_default=True)
@click.option("--delta", type=float, default=0.1, show_default=True)
@click.option("--n-est", type=click.IntRange(2), default=10**6, show_default=True)
@click.option("--leaf-size", type=click.IntRange(2), default=None)
@click.option("--eps-level", type=float, default=None)
@click.option("-c", "const", type=float, default=DEFAULT_C, show_default=True)
@click.option("-i", "--input", "inp", type=click.File("r"), default="-")
@click.option("-o", "--output", default="-")
@click.pass_obj
@_guard
def stream_cmd(obj, eps, delta, n_est, leaf_size, eps_level, const, inp, output):
    """Read px,py,vx,vy,b[,w] records and emit a merge-and-reduce coreset."""
    st = StreamState(eps, delta, n_est, leaf_size, eps_level, const, obj.seed)
    for lineno, line in enumerate(inp, 1):
        try:
            rec = pio.parse_record_line(line)
        except PointLineError as exc:
            raise PointLineError(f"line {lineno}: {exc}") from exc
        if rec is not None:
            stream_insert(st, rec)
    core = stream_coreset(st)
    pio.write_text(output, pio.dumps_pairs(core.pairs, None, obj.fmt, {"u": core.weights}))
    _write_manifest(
        output,
        "stream",
        {
            "eps": eps,
            "delta": delta,
            "leaf_size": st.leaf_size,
            "eps_level": st.eps_level,
            "n_seen": st.n_seen,
            "depth": st.depth,
        },
        obj.seed,
    )


@main.group()
def bench():
    """Experiment sweeps (CSV rows solver,n,k,repeat,value)."""


def _csv_list(text, typ):
    try:
        return [typ(x) for x in text.split(",") if x.strip()]
    except ValueError as exc:
        raise click.BadParameter(str(exc)) from exc


@bench.command("error")
@click.option("-n", type=click.IntRange(3), default=50, show_default=True)
@click.option("--ks", default="0.1,0.3,0.5", show_default=True)
@click.option("--solvers", default="lms,approx", show_default=True)
@click.option("--repeats", type=click.IntRange(1), default=10, show_default=True)
@click.option("-o", "--output", default="-")
@click.pass_obj
@_guard
def bench_error(obj, n, ks, solvers, repeats, output):
    rows = harness.run_error_sweep(
        n, _csv_list(ks, float), _csv_list(solvers, str), repeats, obj.seed, threads=obj.threads
    )
    pio.write_text(output, pio.dumps_rows(rows, obj.fmt, ["solver", "n", "k", "repeat", "value"]))
    _write_manifest(output, "bench error", {"n": n, "ks": ks, "solvers": solvers, "repeats": repeats}, obj.seed)


@bench.command("time")
@click.option("--ns", default="50,100,200", show_default=True)
@click.option("--solvers", default="approx", show_default=True)
@click.option("--repeats", type=click.IntRange(1), default=3, show_default=True)
@click.option("-o", "--output", default="-")
@click.pass_obj
@_guard
def bench_time(obj, ns, solvers, repeats, output):
    rows = harness.run_time_sweep(_csv_list(ns, int), _csv_list(solvers, str), repeats, obj.seed)
    pio.write_text(output, pio.dumps_rows(rows, obj.fmt, ["solver", "n", "k", "repeat", "value"]))
    _write_manifest(output, "bench time", {"ns": ns, "solvers": solvers, "repeats": repeats}, obj.seed)


@main.command("eval")
@click.argument("instance")
@click.argument("alignment")
@click.option("--spec", "spec_arg", default=None)
@click.pass_obj
@_guard
def eval_cmd(obj, instance, alignment, spec_arg):
    """Cost of an alignment JSON on an instance."""
    A, w = _read(obj, instance)
    spec = _load_spec(spec_arg)
    a = pio.read_alignment(alignment)
    click.echo(json.dumps({"cost": evaluate_cost(A, a, spec, w), "spec": spec.to_dict()}))


if __name__ == "__main__":  # pragma: no cover
    main()
