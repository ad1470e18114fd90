"""Command-line entry point.

Subcommands: gen-sweeps (synthetic force sweeps), fit-tables (sweeps -> aero
database), init-scenario (write the bundled reference scenario), optimize
(min-fuel / min-time trajectory), reach (defect-hull expansion with
checkpoint/resume), emit-plots (plot-ready CSV series).

Exit codes: 0 success, 2 usage/config/schema, 3 non-convergence,
4 solver or propagation failure.
"""

from __future__ import annotations

import json
import os
import sys

import click

from . import __version__
from .aerotables import AeroTableError, ingest_sweeps, save_database
from .config import (
    ConfigError,
    Scenario,
    default_scenario_dict,
    load_scenario,
    write_scenario,
)
from .transcription import PropagationError, Transcriber

EXIT_OK = 0
EXIT_USAGE = 2
EXIT_NOCONV = 3
EXIT_SOLVER = 4


def _fail(code: int, msg: str):
    click.echo(f"error: {msg}", err=True)
    sys.exit(code)


@click.group()
@click.version_option(__version__)
def main():
    """Two-phase descent trajectory optimization and ignition reachability."""


@main.command("gen-sweeps")
@click.option("--output", required=True, type=click.Path(), help="sweep CSV to write")
def cmd_gen_sweeps(output):
    """Generate the synthetic aerodynamic force sweep fixture."""
    from .synthetic import synthesize_sweeps

    rows = synthesize_sweeps(output)
    click.echo(f"wrote {rows} sweep rows to {output}")


@main.command("fit-tables")
@click.option("--input", "input_", required=True, type=click.Path(), help="sweep CSV")
@click.option("--output", required=True, type=click.Path(), help="aero database JSON")
@click.option("--report", type=click.Path(), default=None, help="rejected-row report")
def cmd_fit_tables(input_, output, report):
    """Build and validate the aero database from force sweeps."""
    if not os.path.exists(input_):
        _fail(EXIT_USAGE, f"input file not found: {input_}")
    try:
        db, rep = ingest_sweeps(input_)
    except AeroTableError as exc:
        _fail(EXIT_USAGE, f"sweep ingest failed: {exc}")
    save_database(db, output)
    lines = [f"rows read: {rep.n_rows}", f"rows rejected: {len(rep.rejected)}"]
    lines += [f"  line {ln}: {why}" for ln, why in rep.rejected]
    text = "\n".join(lines) + "\n"
    if report:
        with open(report, "w", encoding="utf-8", newline="\n") as f:
            f.write(text)
    click.echo(f"wrote {output} ({rep.n_rows} rows, {len(rep.rejected)} rejected)")


@main.command("init-scenario")
@click.option("--output", required=True, type=click.Path())
@click.option("--aerodb", default="aerodb.json", help="aero database path to reference")
@click.option("--seed", default=20260809, type=int)
def cmd_init_scenario(output, aerodb, seed):
    """Write the bundled reference scenario configuration."""
    write_scenario(default_scenario_dict(aerodb_path=aerodb, seed=seed), output)
    click.echo(f"wrote {output}")


def _load_scenario_or_die(config, threads) -> Scenario:
    try:
        return load_scenario(config, threads=threads)
    except (ConfigError, FileNotFoundError, json.JSONDecodeError) as exc:
        _fail(EXIT_USAGE, f"config: {exc}")


@main.command("optimize")
@click.option("--config", required=True, type=click.Path())
@click.option("--objective", required=True, type=click.Choice(["min-fuel", "min-time"]))
@click.option("--out", required=True, type=click.Path(), help="trajectory document")
@click.option("--report", "report_path", type=click.Path(), default=None)
@click.option("--threads", default=None, type=int, help="cap segment parallelism")
@click.option("--verbose/--quiet", default=True)
def cmd_optimize(config, objective, out, report_path, threads, verbose):
    """Solve the two-phase descent trajectory optimization."""
    from .emitters import compute_channels, limits_doc
    from .iodocs import save_report, save_solution
    from .scp import Objective, solve_trajectory

    scenario = _load_scenario_or_die(config, threads)
    db = scenario.load_aerodb()
    trans = Transcriber(scenario.vehicle, scenario.env, db, scenario.disc)
    try:
        sol, rep = solve_trajectory(
            trans,
            scenario.scp,
            scenario.boundary,
            Objective(objective),
            tan_glideslope=scenario.tan_glideslope,
            init_dil=scenario.init_dil,
        )
    except PropagationError as exc:
        _fail(EXIT_SOLVER, f"propagation failure: {exc}")
    except AssertionError as exc:
        _fail(EXIT_SOLVER, f"internal solver failure: {exc}")

    save_solution(sol, scenario.config_hash, out)
    # plot channels and limit values ride inside the document so downstream
    # consumers never recompute physics
    with open(out, encoding="utf-8") as f:
        doc = json.load(f)
    doc["channels"] = compute_channels(trans, sol)
    doc["limits"] = limits_doc(scenario)
    with open(out, "w", encoding="utf-8", newline="\n") as f:
        json.dump(doc, f, indent=1)
        f.write("\n")
    if report_path:
        save_report(rep, scenario.config_hash, report_path)
    if verbose:
        click.echo(
            f"{objective}: {rep.status} in {sol.iterations} iterations, "
            f"violation {sol.final_violation:.3e}, flight time {sol.dil.total_time:.2f} s, "
            f"final mass {sol.states[-1, 0]:.1f} kg"
        )
    if rep.status == "converged":
        sys.exit(EXIT_OK)
    if rep.status == "max-iters":
        sys.exit(EXIT_NOCONV)
    sys.exit(EXIT_SOLVER)


@main.command("reach")
@click.option("--config", required=True, type=click.Path())
@click.option("--init", "init_path", required=True, type=click.Path(),
              help="converged min-fuel trajectory document")
@click.option("--iters", required=True, type=int)
@click.option("--seed", default=None, type=int, help="override the config seed")
@click.option("--out", required=True, type=click.Path())
@click.option("--archive-dir", default=None, type=click.Path())
@click.option("--checkpoint-every", default=0, type=int)
@click.option("--checkpoint", "checkpoint_path", default=None, type=click.Path())
@click.option("--resume", default=None, type=click.Path(), help="checkpoint to resume")
@click.option("--threads", default=None, type=int)
@click.option("--verbose/--quiet", default=True)
def cmd_reach(config, init_path, iters, seed, out, archive_dir, checkpoint_every,
              checkpoint_path, resume, threads, verbose):
    """Expand the reachable ignition-point polytope."""
    from .iodocs import (
        load_checkpoint,
        load_solution,
        save_archive,
        save_checkpoint,
        save_reach,
    )
    from .reach import ReachContext, init_polytope, make_rng, run_reachability

    scenario = _load_scenario_or_die(config, threads)
    db = scenario.load_aerodb()
    trans = Transcriber(scenario.vehicle, scenario.env, db, scenario.disc)
    from dataclasses import replace as dc_replace

    scp = dc_replace(scenario.scp, max_iters=scenario.reach.max_iters_per_expansion)
    ctx = ReachContext(
        trans=trans,
        scp=scp,
        boundary=scenario.boundary,
        tan_glideslope=scenario.tan_glideslope,
        feasibility_tol=scenario.reach.feasibility_tol,
    )

    if resume:
        poly, rng, _ = load_checkpoint(resume)
        done = poly.iteration
        if verbose:
            click.echo(f"resumed at iteration {done}")
    else:
        try:
            sol, _ = load_solution(init_path)
        except (FileNotFoundError, ValueError) as exc:
            _fail(EXIT_USAGE, f"init solution: {exc}")
        if not sol.converged:
            _fail(EXIT_USAGE, "init solution did not converge")
        use_seed = scenario.seed if seed is None else seed
        poly = init_polytope(sol, scenario.disc.mid_index, use_seed)
        rng = make_rng(use_seed)
        done = 0

    remaining = max(0, iters - done)

    def progress(i, attempt, volume, elapsed):
        if verbose:
            click.echo(
                f"[{i:5d}] {attempt.result:22s} mu={attempt.mu if attempt.mu is not None else float('nan'):9.2f} "
                f"volume={volume:.4e} m^3 ({elapsed:.0f}s)"
            )

    ck_fn = None
    if checkpoint_every and checkpoint_path:
        def ck_fn(p, r):
            save_checkpoint(p, r, scenario.config_hash, checkpoint_path)

    try:
        run_reachability(
            poly, ctx, remaining, rng,
            checkpoint_every=checkpoint_every, checkpoint_fn=ck_fn,
            progress_fn=progress,
        )
    except OSError as exc:
        _fail(EXIT_SOLVER, f"checkpoint write failure: {exc}")

    prefix = ""
    if archive_dir:
        os.makedirs(archive_dir, exist_ok=True)
        prefix = os.path.join(archive_dir, "traj-")
        save_archive(poly, scenario.config_hash, prefix)
    save_reach(poly, scenario.config_hash, out, prefix)
    if checkpoint_every and checkpoint_path:
        save_checkpoint(poly, rng, scenario.config_hash, checkpoint_path)
    stats = poly.rejection_stats()
    if verbose:
        click.echo(
            f"done: {poly.iteration} iterations, volume {poly.volume:.4e} m^3, "
            f"vertices {len(poly.hull.vertex_ids)}, stats {stats}"
        )
    sys.exit(EXIT_OK)


@main.command("emit-plots")
@click.option("--in", "input_", required=True, type=click.Path(), help="traj.json or reach.json")
@click.option("--out", "outdir", required=True, type=click.Path())
def cmd_emit_plots(input_, outdir):
    """Write plot-ready CSV series from a result document."""
    from .emitters import EmitError, emit_reach, emit_trajectory
    from .iodocs import load_archive_entry

    if not os.path.exists(input_):
        _fail(EXIT_USAGE, f"input not found: {input_}")
    with open(input_, encoding="utf-8") as f:
        try:
            doc = json.load(f)
        except json.JSONDecodeError as exc:
            _fail(EXIT_USAGE, f"not a JSON document: {exc}")
    try:
        if "traj_version" in doc:
            written = emit_trajectory(doc, outdir)
        elif "reach_version" in doc:
            prefix = doc.get("archive_prefix", "")
            loader = (lambda key: load_archive_entry(prefix, key)) if prefix else None
            written = emit_reach(doc, outdir, archive_loader=loader)
        else:
            _fail(EXIT_USAGE, "unrecognized document (expected traj or reach)")
    except (EmitError, FileNotFoundError, KeyError) as exc:
        _fail(EXIT_USAGE, f"emit failed: {exc}")
    click.echo(f"wrote {len(written)} files to {outdir}")



if __name__ == "__main__":
    main()
