"""Figure rendering from emitted plot bundles.

Two entry points: `render_trajectory` draws one multi-panel figure (ground
track and profile, angle of attack against its limit, dynamic pressure and
q-alpha against theirs, fin commands inside their state-dependent bounds,
thrust magnitude between its bounds); `render_reach` draws the
volume-vs-iteration curve and three orthogonal polytope projections with
the six extremal trajectories overlaid.

Inputs are never mutated, and output is deterministic for fixed style
options (savefig metadata is pinned).
"""

from __future__ import annotations

import matplotlib

matplotlib.use("Agg")

import matplotlib.pyplot as plt
import numpy as np

from .bundles import BundleError, PlotBundle

_SAVE_META = {"png": {"metadata": {"Software": None}}, "svg": {"metadata": {"Date": None}}}


def _save(fig, bundle: PlotBundle, stem: str) -> str:
    path = bundle.out_path(stem)
    fig.savefig(path, dpi=bundle.dpi, **_SAVE_META[bundle.fmt])
    plt.close(fig)
    return path


def render_trajectory(bundle: PlotBundle) -> dict:
    """Multi-panel trajectory figure; returns paths and the limits used."""
    states = bundle.series("states.csv")
    controls = bundle.series("controls.csv")
    constraints = bundle.series("constraints.csv")
    limits = bundle.json_doc("limits.json")

    t = states.col("t_s")
    fig, axes = plt.subplots(2, 3, figsize=(15, 8))
    fig.suptitle("two-phase descent trajectory")

    ax = axes[0, 0]
    ax.plot(states.col("r_e_m"), states.col("r_up_m"), "-", lw=1.5)
    ax.plot(states.col("r_n_m"), states.col("r_up_m"), "--", lw=1.0)
    ax.set_xlabel("East / North [m]")
    ax.set_ylabel("Up [m]")
    ax.legend(["E-Up", "N-Up"], fontsize=8)
    ax.set_title("flight path")

    ax = axes[0, 1]
    ax.plot(constraints.col("t_s"), constraints.col("alpha_deg"), lw=1.2)
    ax.plot(constraints.col("t_s"), constraints.col("alpha_rolled_deg"), lw=0.9, ls="--")
    ax.axhline(limits["alpha_max_deg"], color="tab:red", lw=1.0)
    ax.set_title("angle of attack [deg]")
    ax.set_xlabel("t [s]")

    ax = axes[0, 2]
    ax.plot(constraints.col("t_s"), constraints.col("q_pa"), lw=1.2)
    ax.axhline(limits["q_max_pa"], color="tab:red", lw=1.0)
    ax2 = ax.twinx()
    ax2.plot(constraints.col("t_s"), constraints.col("qalpha_pa_deg"), color="tab:green", lw=1.0)
    ax2.axhline(limits["chi_max_pa_deg"], color="tab:olive", lw=1.0, ls="--")
    ax.set_title("dynamic pressure / q-alpha")
    ax.set_xlabel("t [s]")

    ax = axes[1, 0]
    tc = controls.col("t_s")
    for i in (1, 2):
        ax.plot(tc, controls.col(f"fin{i}_cmd"), lw=1.2, label=f"fin {i}")
        ax.plot(tc, controls.col(f"fin{i}_lo"), lw=0.8, ls=":", color="gray")
        ax.plot(tc, controls.col(f"fin{i}_hi"), lw=0.8, ls=":", color="gray")
    ax.set_title("fin commands and bounds")
    ax.set_xlabel("t [s]")
    ax.legend(fontsize=8)

    ax = axes[1, 1]
    ax.plot(tc, np.asarray(controls.col("thrust_mag_n")) / 1e3, lw=1.2)
    ax.axhline(limits["u_min_n"] / 1e3, color="tab:red", lw=1.0, ls="--")
    ax.axhline(limits["u_max_n"] / 1e3, color="tab:red", lw=1.0)
    ax.set_title("thrust magnitude [kN]")
    ax.set_xlabel("t [s]")

    ax = axes[1, 2]
    speed = np.linalg.norm(
        np.column_stack([states.col("v_n_m_s"), states.col("v_e_m_s"), states.col("v_up_m_s")]),
        axis=1,
    )
    ax.plot(t, speed, lw=1.2)
    ax.set_title("speed [m/s]")
    ax.set_xlabel("t [s]")

    fig.tight_layout()
    path = _save(fig, bundle, "trajectory")
    return {"figures": [path], "limits": limits, "panels": 6}


_PROJECTIONS = (("r_n_m", "r_e_m", "N-E"), ("r_n_m", "r_up_m", "N-Up"), ("r_e_m", "r_up_m", "E-Up"))
_EXTREMALS = ("plus_n", "minus_n", "plus_e", "minus_e", "plus_up", "minus_up")


def render_reach(bundle: PlotBundle) -> dict:
    """Volume curve plus three projections; returns paths and data bounds."""
    vol = bundle.series("volume_history.csv")
    verts = bundle.series("vertices.csv")

    extremals = []
    for name in _EXTREMALS:
        try:
            extremals.append((name, bundle.series(f"extremal_{name}.csv")))
        except BundleError:
            pass  # degenerate early hulls may predate any archive

    fig, axes = plt.subplots(2, 2, figsize=(12, 9))
    fig.suptitle("reachable ignition-point polytope")

    ax = axes[0, 0]
    ax.plot(vol.col("iteration"), vol.col("volume_m3"), lw=1.4)
    ax.set_xlabel("iteration")
    ax.set_ylabel("volume [m^3]")
    ax.set_title("hull volume growth")

    bounds = {}
    for ax, (cx, cy, label) in zip((axes[0, 1], axes[1, 0], axes[1, 1]), _PROJECTIONS):
        xs = np.asarray(verts.col(cx))
        ys = np.asarray(verts.col(cy))
        ax.scatter(xs, ys, s=18, color="tab:blue", zorder=3)
        for _, ser in extremals:
            ax.plot(ser.col(cx), ser.col(cy), lw=0.8, alpha=0.8)
        ax.set_title(f"projection {label}")
        ax.set_xlabel(cx)
        ax.set_ylabel(cy)
        bounds[label] = {
            "x": [float(xs.min()), float(xs.max())],
            "y": [float(ys.min()), float(ys.max())],
        }

    fig.tight_layout()
    path = _save(fig, bundle, "reach")
    return {"figures": [path], "projection_bounds": bounds, "n_extremals": len(extremals)}
