"""Plot-ready CSV emission from result documents.

The renderer downstream reads only these files (no physics recomputation),
so everything a figure needs -- per-node constraint channels, state-dependent
fin bounds, and the scenario limit values -- is computed here or carried
inside the trajectory document written by the optimizer.
"""

from __future__ import annotations

import csv
import json
import math
import os

import numpy as np

from .kernels import pure as kpure
from .scp import TrajectorySolution
from .transcription import DilatedTime, Transcriber, time_map

RAD2DEG = 180.0 / math.pi


def compute_channels(trans: Transcriber, sol: TrajectorySolution) -> dict:
    """Per-node plot channels: times, aero angles, pressures, fin bounds."""
    disc = trans.disc
    taus = disc.taus
    n = disc.n_nodes
    out = {
        "tau": taus.tolist(),
        "t_s": [time_map(float(t), sol.dil) for t in taus],
        "alpha_deg": [],
        "alpha_rolled_deg": [],
        "mach": [],
        "q_pa": [],
        "qalpha_pa_deg": [],
        "fin_lo": [],
        "fin_hi": [],
    }
    pp, tb = trans.params, trans.tables
    from .kernels import common as cm

    for k in range(n):
        x = sol.states[k]
        v = x[4:7]
        speed = float(np.linalg.norm(v))
        rho, _, c_snd, _ = kpure._atmo(
            float(np.linalg.norm(x[1:4] - pp[cm.P_RCENTER : cm.P_RCENTER + 3]))
            - pp[cm.P_PLANET_R],
            pp[cm.P_ATMSCALE],
            pp[cm.P_PLANET_R],
        )
        if speed > 1e-9:
            t_bi, _, _ = kpure._attitude_mats(x[7], x[8])
            qcos = max(-1.0, min(1.0, float(-(t_bi[:, 2] @ (v / speed)))))
            alpha = math.acos(qcos)
            rolled = math.tanh(speed / trans.vehicle.v_small) * alpha
            mach = speed / c_snd
        else:
            alpha = rolled = mach = 0.0
        q = 0.5 * rho * speed**2
        out["alpha_deg"].append(alpha * RAD2DEG)
        out["alpha_rolled_deg"].append(rolled * RAD2DEG)
        out["mach"].append(mach)
        out["q_pa"].append(q)
        out["qalpha_pa_deg"].append(q * alpha * RAD2DEG)
        lo, hi, _, _ = kpure.fin_bound_linearization(x, pp, tb)
        out["fin_lo"].append(lo.tolist())
        out["fin_hi"].append(hi.tolist())
    return out


def limits_doc(scenario) -> dict:
    c = scenario.raw["constraints"]
    v = scenario.raw["vehicle"]
    return {
        "alpha_max_deg": c["alpha_max_deg"],
        "q_max_pa": c["q_max_pa"],
        "chi_max_pa_deg": c["chi_max_pa_deg"],
        "glideslope_deg": c["glideslope_deg"],
        "v_small_m_s": c["v_small_m_s"],
        "u_min_n": v["u_min_n"],
        "u_max_n": v["u_max_n"],
        "omega_max_deg_s": v["omega_max_deg_s"],
    }


def _write_csv(path: str, header: list[str], rows) -> None:
    with open(path, "w", encoding="utf-8", newline="\n") as f:
        w = csv.writer(f, lineterminator="\n")
        w.writerow(header)
        for row in rows:
            w.writerow([f"{x:.17g}" if isinstance(x, float) else x for x in row])


class EmitError(ValueError):
    pass


def emit_trajectory(doc: dict, outdir: str) -> list[str]:
    """states.csv, controls.csv, constraints.csv, limits.json from a traj doc."""
    if "channels" not in doc or "limits" not in doc:
        raise EmitError("trajectory document lacks plot channels; re-run optimize")
    os.makedirs(outdir, exist_ok=True)
    states = np.asarray(doc["states"], dtype=float)
    controls = np.asarray(doc["controls"], dtype=float)
    ch = doc["channels"]
    lim = doc["limits"]
    n = states.shape[0]
    written = []

    path = os.path.join(outdir, "states.csv")
    _write_csv(
        path,
        [
            "tau", "t_s", "m_kg", "r_n_m", "r_e_m", "r_up_m",
            "v_n_m_s", "v_e_m_s", "v_up_m_s", "att1_rad", "att2_rad",
            "om1_rad_s", "om2_rad_s",
        ],
        (
            [ch["tau"][k], ch["t_s"][k], *states[k].tolist()]
            for k in range(n)
        ),
    )
    written.append(path)

    path = os.path.join(outdir, "controls.csv")
    _write_csv(
        path,
        [
            "tau", "t_s", "ut_x_n", "ut_y_n", "ut_z_n", "thrust_mag_n",
            "fin1_cmd", "fin2_cmd", "fin1_lo", "fin1_hi", "fin2_lo", "fin2_hi",
        ],
        (
            [
                ch["tau"][k], ch["t_s"][k], *controls[k, 0:3].tolist(),
                float(np.linalg.norm(controls[k, 0:3])),
                controls[k, 3], controls[k, 4],
                ch["fin_lo"][k][0], ch["fin_hi"][k][0],
                ch["fin_lo"][k][1], ch["fin_hi"][k][1],
            ]
            for k in range(n)
        ),
    )
    written.append(path)

    path = os.path.join(outdir, "constraints.csv")
    tan_gs = math.tan(math.radians(lim["glideslope_deg"]))
    _write_csv(
        path,
        [
            "tau", "t_s", "alpha_deg", "alpha_rolled_deg", "alpha_max_deg",
            "mach", "q_pa", "q_max_pa", "qalpha_pa_deg", "chi_max_pa_deg",
            "omega_mag_deg_s", "omega_max_deg_s",
            "thrust_mag_n", "u_min_n", "u_max_n",
            "lateral_m", "glideslope_radius_m",
        ],
        (
            [
                ch["tau"][k], ch["t_s"][k], ch["alpha_deg"][k],
                ch["alpha_rolled_deg"][k], lim["alpha_max_deg"],
                ch["mach"][k], ch["q_pa"][k], lim["q_max_pa"],
                ch["qalpha_pa_deg"][k], lim["chi_max_pa_deg"],
                float(np.linalg.norm(states[k, 9:11])) * RAD2DEG,
                lim["omega_max_deg_s"],
                float(np.linalg.norm(controls[k, 0:3])),
                lim["u_min_n"], lim["u_max_n"],
                float(np.linalg.norm(states[k, 1:3])),
                tan_gs * states[k, 3],
            ]
            for k in range(n)
        ),
    )
    written.append(path)

    path = os.path.join(outdir, "limits.json")
    with open(path, "w", encoding="utf-8", newline="\n") as f:
        json.dump(lim, f, indent=1)
        f.write("\n")
    written.append(path)
    return written


CARDINALS = (
    ("plus_n", 0, 1.0),
    ("minus_n", 0, -1.0),
    ("plus_e", 1, 1.0),
    ("minus_e", 1, -1.0),
    ("plus_up", 2, 1.0),
    ("minus_up", 2, -1.0),
)


def emit_reach(doc: dict, outdir: str, archive_loader=None) -> list[str]:
    """volume_history.csv, vertices.csv, and six extremal trajectory tracks."""
    os.makedirs(outdir, exist_ok=True)
    written = []

    path = os.path.join(outdir, "volume_history.csv")
    _write_csv(
        path,
        ["iteration", "volume_m3"],
        ((i, float(v)) for i, v in enumerate(doc["volume_history_m3"])),
    )
    written.append(path)

    verts = doc["vertices"]
    path = os.path.join(outdir, "vertices.csv")
    _write_csv(
        path,
        ["r_n_m", "r_e_m", "r_up_m", "archive_key"],
        ((v["point"][0], v["point"][1], v["point"][2], v["archive_key"]) for v in verts),
    )
    written.append(path)

    path = os.path.join(outdir, "reach_summary.json")
    with open(path, "w", encoding="utf-8", newline="\n") as f:
        json.dump(
            {
                "seed": doc["seed"],
                "iterations": doc["iterations"],
                "volume_m3": doc["volume_m3"],
                "hull_dim": doc["hull_dim"],
                "rejection_stats": doc["rejection_stats"],
                "config_hash": doc.get("config_hash", ""),
            },
            f,
            indent=1,
        )
        f.write("\n")
    written.append(path)

    if archive_loader is not None and verts:
        pts = np.array([v["point"] for v in verts])
        for name, axis, sign in CARDINALS:
            idx = int(np.argmax(sign * pts[:, axis]))
            key = int(verts[idx]["archive_key"])
            arch = archive_loader(key)
            dil = DilatedTime(arch.tau_a, arch.tau_p)
            n = arch.states.shape[0]
            taus = np.linspace(0.0, 1.0, n)
            path = os.path.join(outdir, f"extremal_{name}.csv")
            _write_csv(
                path,
                ["tau", "t_s", "r_n_m", "r_e_m", "r_up_m", "m_kg", "speed_m_s"],
                (
                    [
                        float(taus[k]), time_map(float(taus[k]), dil),
                        arch.states[k, 1], arch.states[k, 2], arch.states[k, 3],
                        arch.states[k, 0],
                        float(np.linalg.norm(arch.states[k, 4:7])),
                    ]
                    for k in range(n)
                ),
            )
            written.append(path)
    return written
