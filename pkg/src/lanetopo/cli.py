"""Command line interface.

Every option can also be set through ``LANETOPO_<COMMAND>_<OPTION>``
environment variables (flag > env > default). Exit codes: 0 success,
2 malformed input, 3 assumption violation, 4 internal inconsistency.
"""
from __future__ import annotations

import functools
import json
import logging
import os
import sys
from concurrent.futures import ProcessPoolExecutor
from pathlib import Path

import click

from . import __version__
from .arrangement import build_arrangement
from .errors import (
    ArrangementError,
    AssumptionViolation,
    LaneTopoError,
    ParameterError,
    SchemaError,
    StructureError,
)
from .geometry import GEOM_TOL
from .io import (
    REPORT_VERSION,
    cycles_to_dict,
    dumps,
    graph_from_dict,
    load_graph,
    load_prediction,
    prediction_from_dict,
    read_json,
    save_graph,
)
from .lanegraph import validate_graph
from .loss import LossWeights, total_loss
from .bundles import GroundTruthBundle
from .metrics import (
    DEFAULT_TAU_DETECT,
    DEFAULT_THRESHOLD,
    METRIC_KINDS,
    SceneMetrics,
    aggregate,
    evaluate_scene,
)
from .render import render_svg
from .suite import DEFAULT_MAGNITUDES, run_suite, summarize
from .synth import SceneParams, gen_grid, gen_random_scene, scene_metadata

EXIT_SCHEMA, EXIT_ASSUMPTION, EXIT_INTERNAL = 2, 3, 4


def _fail(code: int, exc: BaseException) -> None:
    err = {"error": type(exc).__name__, "message": str(exc), "exit_code": code}
    if isinstance(exc, AssumptionViolation):
        err["kind"] = exc.kind
        err["curves"] = list(exc.curves)
    click.echo(json.dumps(err, sort_keys=True), err=True)
    sys.exit(code)


def handled(fn):
    """Map package exceptions to exit codes with a JSON error on stderr."""

    @functools.wraps(fn)
    def wrapper(*args, **kwargs):
        try:
            return fn(*args, **kwargs)
        except (SchemaError, StructureError, FileNotFoundError) as e:
            _fail(EXIT_SCHEMA, e)
        except AssumptionViolation as e:
            _fail(EXIT_ASSUMPTION, e)
        except (ArrangementError, LaneTopoError) as e:
            _fail(EXIT_INTERNAL, e)

    return wrapper


def _emit(text: str, out: str | None) -> None:
    if out:
        Path(out).write_text(text)
    else:
        click.echo(text, nl=False)


def _jobs(n: int | None) -> int:
    return n if n and n > 0 else (os.cpu_count() or 1)


tol_option = click.option("--tol", type=float, default=GEOM_TOL, show_default=True,
                          help="Geometric tolerance in normalized units.")
out_option = click.option("-o", "--out", type=click.Path(dir_okay=False), default=None,
                          help="Output file (stdout if omitted).")
jobs_option = click.option("--jobs", type=int, default=0, show_default=True,
                           help="Worker processes (0 = all cores).")


@click.group(context_settings={"auto_envvar_prefix": "LANETOPO", "show_default": True})
@click.version_option(__version__)
@click.option("-v", "--verbose", is_flag=True, help="Log to stderr.")
def cli(verbose):
    """Minimal-cycle topology tools for Bezier lane graphs."""
    logging.basicConfig(level=logging.INFO if verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")


@cli.command()
@click.argument("path", type=click.Path(exists=True, dir_okay=False))
@tol_option
@out_option
@handled
def validate(path, tol, out):
    """Check a graph file against the lane-graph assumptions."""
    rep = validate_graph(load_graph(path), tol)
    _emit(dumps(rep.to_dict()), out)
    if not rep.ok:
        sys.exit(EXIT_ASSUMPTION)


@cli.command()
@click.argument("path", type=click.Path(exists=True, dir_okay=False))
@tol_option
@out_option
@handled
def cycles(path, tol, out):
    """Extract the minimal cycles of a graph file."""
    arr = build_arrangement(load_graph(path), tol)
    _emit(dumps(cycles_to_dict(arr)), out)


@cli.command()
@click.argument("path", type=click.Path(exists=True, dir_okay=False))
@click.option("-o", "--out", type=click.Path(dir_okay=False), required=True)
@click.option("--size", type=int, default=512, help="Image side in pixels.")
@click.option("--labels/--no-labels", default=True, help="Draw lane ids.")
@tol_option
@handled
def render(path, out, size, labels, tol):
    """Draw a graph and its minimal cycles as SVG."""
    arr = build_arrangement(load_graph(path), tol)
    Path(out).write_text(render_svg(arr, size=size, show_ids=labels))


def _load_estimate(path: Path):
    doc = read_json(path)
    if isinstance(doc, dict) and "connectivity" in doc:
        return prediction_from_dict(doc)
    return graph_from_dict(doc)


def _eval_one(args):
    name, gt_path, est_path, threshold, tau, tol = args
    logging.disable(logging.WARNING)
    gt = load_graph(gt_path)
    est = _load_estimate(est_path)
    return name, evaluate_scene(gt, est, threshold, tau, tol).to_dict()


@cli.command("eval")
@click.argument("gt_dir", type=click.Path(exists=True, file_okay=False))
@click.argument("pred_dir", type=click.Path(exists=True, file_okay=False))
@click.option("--threshold", type=float, default=DEFAULT_THRESHOLD, help="Existence cutoff.")
@click.option("--tau-detect", type=float, default=DEFAULT_TAU_DETECT,
              help="Per-coordinate L1 cutoff for the detection ratio.")
@tol_option
@jobs_option
@out_option
@handled
def eval_cmd(gt_dir, pred_dir, threshold, tau_detect, tol, jobs, out):
    """Score estimates against ground truth, matched by file name.

    PRED_DIR files may be graph files or prediction files.
    """
    names = sorted(p.name for p in Path(gt_dir).glob("*.json"))
    missing = [n for n in names if not (Path(pred_dir) / n).is_file()]
    if missing:
        raise SchemaError(f"no estimate for {missing}")
    tasks = [(n, Path(gt_dir) / n, Path(pred_dir) / n, threshold, tau_detect, tol) for n in names]
    if _jobs(jobs) == 1 or len(tasks) <= 1:
        results = [_eval_one(t) for t in tasks]
    else:
        with ProcessPoolExecutor(max_workers=_jobs(jobs)) as ex:
            results = list(ex.map(_eval_one, tasks))
    scenes = dict(results)
    agg = aggregate({k: SceneMetrics(**v) for k, v in scenes.items()})
    report = {
        "version": REPORT_VERSION,
        "settings": {"threshold": threshold, "tau_detect": tau_detect, "tol": tol},
        "metric_kinds": METRIC_KINDS,
        "scenes": scenes,
        "aggregate": agg,
    }
    _emit(dumps(report), out)


@cli.command()
@click.argument("pred", type=click.Path(exists=True, dir_okay=False))
@click.argument("gt", type=click.Path(exists=True, dir_okay=False))
@click.option("--alpha", type=float, default=1.0)
@click.option("--beta-e", type=float, default=1.0)
@click.option("--beta-c", type=float, default=1.0)
@click.option("--beta-d", type=float, default=1.0)
@click.option("--beta-f", type=float, default=1.0)
@tol_option
@out_option
@handled
def loss(pred, gt, alpha, beta_e, beta_c, beta_d, beta_f, tol, out):
    """Evaluate the training objective for one prediction file."""
    try:
        w = LossWeights(alpha, beta_e, beta_c, beta_d, beta_f)
        res = total_loss(load_prediction(pred), GroundTruthBundle.from_graph(load_graph(gt), tol), w)
    except ParameterError as e:
        if isinstance(e, StructureError):
            raise
        raise SchemaError(str(e)) from None
    _emit(dumps({"version": REPORT_VERSION, "weights": w.__dict__, "loss": res.to_dict()}), out)


@cli.command()
@click.option("--seed", type=int, default=0, help="First seed.")
@click.option("--count", type=int, default=1, help="Number of scenes (seeds seed..seed+count-1).")
@click.option("--grid", type=(int, int), default=None, help="Write one NX x NY grid instead.")
@click.option("--min-lanes", type=int, default=SceneParams.min_lanes)
@click.option("--max-lanes", type=int, default=SceneParams.max_lanes)
@click.option("--curvature", type=float, default=SceneParams.curvature)
@click.option("--connection-prob", type=float, default=SceneParams.connection_prob)
@click.option("--out-dir", type=click.Path(file_okay=False), required=True)
@tol_option
@handled
def synth(seed, count, grid, min_lanes, max_lanes, curvature, connection_prob, out_dir, tol):
    """Write synthetic graph files."""
    d = Path(out_dir)
    d.mkdir(parents=True, exist_ok=True)
    if grid:
        nx, ny = grid
        save_graph(gen_grid(nx, ny, tol), d / f"grid_{nx}x{ny}.json",
                   {"generator": "gen_grid", "nx": nx, "ny": ny})
        return
    try:
        for s in range(seed, seed + count):
            p = SceneParams(s, min_lanes, max_lanes, curvature, connection_prob)
            save_graph(gen_random_scene(p, tol), d / f"scene_{s:05d}.json", scene_metadata(p))
    except ParameterError as e:
        raise SchemaError(str(e)) from None


@cli.command("lemma-check")
@click.option("--seed", type=int, default=0, help="First scene seed.")
@click.option("--scenes", type=int, default=100)
@click.option("--magnitudes", type=str, default=",".join(str(m) for m in DEFAULT_MAGNITUDES),
              help="Comma-separated deformation magnitudes.")
@click.option("--swaps/--no-swaps", default=True, help="Add path-exchange trials.")
@jobs_option
@out_option
@handled
def lemma_check(seed, scenes, magnitudes, swaps, jobs, out):
    """Run cover-uniqueness and order/cover equivalence trials."""
    try:
        mags = tuple(float(m) for m in magnitudes.split(",") if m.strip())
    except ValueError as e:
        raise SchemaError(f"bad --magnitudes: {e}") from None
    outcomes = run_suite(range(seed, seed + scenes), mags, swaps, jobs=_jobs(jobs))
    rep = summarize(outcomes)
    rep["version"] = REPORT_VERSION
    rep["settings"] = {"seed": seed, "scenes": scenes, "magnitudes": list(mags), "swaps": swaps}
    _emit(dumps(rep), out)


def main(argv=None):
    cli.main(args=argv, prog_name="lanetopo")

