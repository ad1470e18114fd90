"""Benchmark: compiled propagation kernel against the pure-numpy fallback.

Times single-segment propagation (with and without sensitivities) and a full
41-node shooting sweep for both backends, then prints the speedups. Run:

    python benchmarks/bench_kernels.py [--repeats 5]
"""

import argparse
import math
import os
import sys
import tempfile
import time

import numpy as np

sys.path.insert(0, os.path.join(os.path.dirname(__file__), os.pardir, "src"))

from aeroreach import synthetic  # noqa: E402
from aeroreach.aerotables import ingest_sweeps  # noqa: E402
from aeroreach.config import default_scenario_dict, scenario_from_dict  # noqa: E402
from aeroreach.kernels import get_backend  # noqa: E402
from aeroreach.transcription import DilatedTime, Transcriber  # noqa: E402


def build_problem():
    tmp = tempfile.mkdtemp()
    sweeps = os.path.join(tmp, "sweeps.csv")
    synthetic.synthesize_sweeps(sweeps)
    db, _ = ingest_sweeps(sweeps)
    doc = default_scenario_dict(aerodb_path="unused")
    doc["aerodb_path"] = sweeps  # placeholder; db already loaded
    scenario = scenario_from_dict(doc, base_dir=tmp)
    trans = Transcriber(scenario.vehicle, scenario.env, db, scenario.disc)
    from aeroreach.scp import BoundaryConditions, Objective, ScpParams, solve_trajectory

    sol, rep = solve_trajectory(
        trans,
        ScpParams(threads=os.cpu_count() or 1),
        scenario.boundary,
        Objective("min-fuel"),
        tan_glideslope=scenario.tan_glideslope,
        init_dil=scenario.init_dil,
    )
    assert rep.status == "converged", rep.status
    return trans, sol


def time_fn(fn, repeats, min_seconds=0.5):
    best = math.inf
    for _ in range(repeats):
        n = 0
        t0 = time.perf_counter()
        while time.perf_counter() - t0 < min_seconds:
            fn()
            n += 1
        best = min(best, (time.perf_counter() - t0) / n)
    return best


def main():
    ap = argparse.ArgumentParser()
    ap.add_argument("--repeats", type=int, default=3)
    args = ap.parse_args()

    print("building reference problem (min-fuel solve)...", flush=True)
    trans, sol = build_problem()
    disc = trans.disc
    dil = DilatedTime(sol.dil.tau_a, sol.dil.tau_p)
    k = 10
    seg_args = (
        sol.states[k],
        sol.controls[k],
        sol.controls[k + 1],
        dil.tau_a,
        21,
        0,
        1.0 / (disc.n_nodes - 1),
        trans.params,
        trans.tables.blob,
        trans.tables.idx,
        disc.rtol,
        disc.atol_vector,
    )

    rows = []
    results = {}
    for name in ("pure", "compiled"):
        try:
            backend = get_backend(name)
        except RuntimeError:
            print(f"{name}: unavailable, skipping")
            continue

        t_nojac = time_fn(lambda b=backend: b.propagate_segment_raw(*seg_args, False), args.repeats)
        t_jac = time_fn(lambda b=backend: b.propagate_segment_raw(*seg_args, True), args.repeats)

        old = trans._backend
        trans._backend = backend
        t_sweep = time_fn(
            lambda: trans.propagate_all(sol.states, sol.controls, dil, want_jac=True, threads=1),
            args.repeats,
            min_seconds=1.0,
        )
        trans._backend = old
        results[name] = (t_nojac, t_jac, t_sweep)
        rows.append((name, t_nojac, t_jac, t_sweep))

    print()
    print(f"{'backend':10s} {'segment':>12s} {'segment+jac':>12s} {'41-node sweep':>14s}")
    for name, a, b, c in rows:
        print(f"{name:10s} {a * 1e3:9.3f} ms {b * 1e3:9.3f} ms {c * 1e3:11.1f} ms")
    if "pure" in results and "compiled" in results:
        p, c = results["pure"], results["compiled"]
        print(
            f"\nspeedup (pure/compiled): segment {p[0] / c[0]:.1f}x, "
            f"segment+jac {p[1] / c[1]:.1f}x, sweep {p[2] / c[2]:.1f}x"
        )


if __name__ == "__main__":
    main()
