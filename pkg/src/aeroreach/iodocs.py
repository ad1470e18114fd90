"""Versioned output documents: trajectories, solve reports, reach results.

All documents are JSON with LF endings, embed the tool version and config
hash, and round-trip exactly (arrays serialized in full float precision via
repr-style JSON floats).
"""

from __future__ import annotations

import json

import numpy as np

from .config import tool_stamp
from .reach import ArchivedTrajectory, ExpansionAttempt, ReachPolytope
from .scp import SolveReport, TrajectorySolution
from .transcription import DilatedTime

TRAJ_VERSION = 1
REACH_VERSION = 1


def _write(doc: dict, path: str) -> None:
    with open(path, "w", encoding="utf-8", newline="\n") as f:
        json.dump(doc, f, indent=1)
        f.write("\n")


def _read(path: str) -> dict:
    with open(path, encoding="utf-8") as f:
        return json.load(f)


def save_solution(sol: TrajectorySolution, cfg_hash: str, path: str) -> None:
    doc = {
        "traj_version": TRAJ_VERSION,
        **tool_stamp(cfg_hash),
        "objective": sol.objective_kind,
        "converged": sol.converged,
        "iterations": sol.iterations,
        "final_violation": sol.final_violation,
        "cost": sol.cost,
        "tau_a_s": sol.dil.tau_a,
        "tau_p_s": sol.dil.tau_p,
        "states": sol.states.tolist(),
        "controls": sol.controls.tolist(),
    }
    _write(doc, path)


def load_solution(path: str) -> tuple[TrajectorySolution, dict]:
    doc = _read(path)
    if doc.get("traj_version") != TRAJ_VERSION:
        raise ValueError(f"unsupported traj_version {doc.get('traj_version')!r}")
    sol = TrajectorySolution(
        states=np.asarray(doc["states"], dtype=float),
        controls=np.asarray(doc["controls"], dtype=float),
        dil=DilatedTime(doc["tau_a_s"], doc["tau_p_s"]),
        converged=bool(doc["converged"]),
        iterations=int(doc["iterations"]),
        final_violation=float(doc["final_violation"]),
        cost=float(doc["cost"]),
        objective_kind=doc["objective"],
    )
    return sol, doc


def save_report(report: SolveReport, cfg_hash: str, path: str) -> None:
    doc = {"report_version": 1, **tool_stamp(cfg_hash), **report.as_dict()}
    _write(doc, path)


def save_reach(poly: ReachPolytope, cfg_hash: str, path: str, archive_prefix: str) -> None:
    verts = [{"point": p.tolist(), "archive_key": int(k)} for p, k in poly.vertex_keys]
    doc = {
        "reach_version": REACH_VERSION,
        **tool_stamp(cfg_hash),
        "seed": int(poly.seed),
        "iterations": poly.iteration,
        "volume_m3": poly.volume,
        "volume_history_m3": poly.volume_history,
        "hull_dim": poly.hull.dim,
        "vertices": verts,
        "hull_vertex_points": poly.hull.vertices.tolist(),
        "facets": poly.hull.facet_array().tolist() if poly.hull.dim == 3 else [],
        "hull_points": np.asarray(poly.hull.points).tolist(),
        "rejection_stats": poly.rejection_stats(),
        "attempts": [a.as_dict() for a in poly.attempts],
        "archive_prefix": archive_prefix,
    }
    _write(doc, path)


def save_archive(poly: ReachPolytope, cfg_hash: str, prefix: str) -> int:
    """One document per archived trajectory; returns the count written."""
    for key, arch in sorted(poly.archive.items()):
        doc = {
            "archive_version": 1,
            **tool_stamp(cfg_hash),
            "key": int(key),
            "tau_a_s": arch.tau_a,
            "tau_p_s": arch.tau_p,
            "states": arch.states.tolist(),
            "controls": arch.controls.tolist(),
        }
        _write(doc, f"{prefix}{key:06d}.json")
    return len(poly.archive)


def load_archive_entry(prefix: str, key: int) -> ArchivedTrajectory:
    doc = _read(f"{prefix}{key:06d}.json")
    return ArchivedTrajectory(
        states=np.asarray(doc["states"], dtype=float),
        controls=np.asarray(doc["controls"], dtype=float),
        tau_a=float(doc["tau_a_s"]),
        tau_p=float(doc["tau_p_s"]),
    )


def load_reach(path: str) -> dict:
    doc = _read(path)
    if doc.get("reach_version") != REACH_VERSION:
        raise ValueError(f"unsupported reach_version {doc.get('reach_version')!r}")
    return doc


# --- checkpoint / resume ----------------------------------------------------


def rng_state_doc(rng: np.random.Generator) -> dict:
    st = rng.bit_generator.state
    return {
        "bit_generator": st["bit_generator"],
        "counter": [int(x) for x in st["state"]["counter"]],
        "key": [int(x) for x in st["state"]["key"]],
        "buffer": [int(x) for x in st["buffer"]],
        "buffer_pos": int(st["buffer_pos"]),
        "has_uint32": int(st["has_uint32"]),
        "uinteger": int(st["uinteger"]),
    }


def rng_from_doc(doc: dict) -> np.random.Generator:
    rng = np.random.Generator(np.random.Philox())
    rng.bit_generator.state = {
        "bit_generator": doc["bit_generator"],
        "state": {
            "counter": np.array(doc["counter"], dtype=np.uint64),
            "key": np.array(doc["key"], dtype=np.uint64),
        },
        "buffer": np.array(doc["buffer"], dtype=np.uint64),
        "buffer_pos": doc["buffer_pos"],
        "has_uint32": doc["has_uint32"],
        "uinteger": doc["uinteger"],
    }
    return rng


def save_checkpoint(poly: ReachPolytope, rng: np.random.Generator, cfg_hash: str, path: str) -> None:
    doc = {
        "checkpoint_version": 1,
        **tool_stamp(cfg_hash),
        "seed": int(poly.seed),
        "iteration": poly.iteration,
        "volume_history_m3": poly.volume_history,
        "attempts": [a.as_dict() for a in poly.attempts],
        "archive": {
            str(k): {
                "tau_a_s": a.tau_a,
                "tau_p_s": a.tau_p,
                "states": a.states.tolist(),
                "controls": a.controls.tolist(),
            }
            for k, a in poly.archive.items()
        },
        "vertex_keys": [{"point": p.tolist(), "key": int(k)} for p, k in poly.vertex_keys],
        "rng": rng_state_doc(rng),
    }
    _write(doc, path)


def load_checkpoint(path: str) -> tuple[ReachPolytope, np.random.Generator, str]:
    from .hull import IncrementalHull

    doc = _read(path)
    if doc.get("checkpoint_version") != 1:
        raise ValueError("unsupported checkpoint version")
    poly = ReachPolytope(hull=IncrementalHull(), seed=int(doc["seed"]))
    poly.volume_history = [float(v) for v in doc["volume_history_m3"]]
    poly.iteration = int(doc["iteration"])
    for a in doc["attempts"]:
        poly.attempts.append(
            ExpansionAttempt(
                index=int(a["index"]),
                origin=np.asarray(a["origin"], dtype=float),
                direction=np.asarray(a["direction"], dtype=float),
                result=a["result"],
                mu=a["mu"],
                vertex=None if a["vertex"] is None else np.asarray(a["vertex"], dtype=float),
                archive_key=a["archive_key"],
                detail=a.get("detail", ""),
            )
        )
    for k, a in doc["archive"].items():
        poly.archive[int(k)] = ArchivedTrajectory(
            states=np.asarray(a["states"], dtype=float),
            controls=np.asarray(a["controls"], dtype=float),
            tau_a=float(a["tau_a_s"]),
            tau_p=float(a["tau_p_s"]),
        )
    # rebuild the hull exactly as it grew: first vertex, then accepted points
    first = np.asarray(doc["vertex_keys"][0]["point"], dtype=float)
    poly.hull.insert(first)
    for a in poly.attempts:
        if a.result.startswith("accepted") and a.vertex is not None:
            poly.hull.insert(a.vertex)
    poly.vertex_keys = [
        (np.asarray(v["point"], dtype=float), int(v["key"])) for v in doc["vertex_keys"]
    ]
    return poly, rng_from_doc(doc["rng"]), doc.get("config_hash", "")
