"""Aerodynamic coefficient tables: construction, interpolation, and ingest.

Body lift and pitching moment use csc(alpha)-factored tables so the force
and moment cross products stay singularity-free at zero angle of attack: the
stored value at alpha = 0 is exactly 0 and every other entry is the raw
coefficient divided by sin(alpha). Fin actuators carry a lift scale and
state-dependent command bounds on a (mach, alpha1, alpha2) grid plus a
mach-indexed induced-drag polar.

All interpolation is multilinear with clamping outside the breakpoint range;
gradients are the piecewise-constant patch slopes (right-sided at
breakpoints, zero in the clamped region), which is what the trajectory
linearization consumes.

Angle breakpoints are stored in degrees; queries take degrees.
"""

from __future__ import annotations

import csv
import json
import math
from dataclasses import dataclass, field

import numpy as np


class AeroTableError(ValueError):
    """Inconsistent or malformed aerodynamic table data."""


def _check_breakpoints(b: np.ndarray, name: str) -> None:
    if b.ndim != 1 or b.size < 2:
        raise AeroTableError(f"{name}: need at least two breakpoints")
    if not np.all(np.isfinite(b)):
        raise AeroTableError(f"{name}: non-finite breakpoints")
    if not np.all(np.diff(b) > 0):
        raise AeroTableError(f"{name}: breakpoints must be strictly increasing")


@dataclass(frozen=True)
class Grid2:
    """Coefficient over (alpha [deg], mach): values[i, j] at (alpha[i], mach[j])."""

    alpha: np.ndarray
    mach: np.ndarray
    values: np.ndarray

    def __post_init__(self):
        object.__setattr__(self, "alpha", np.asarray(self.alpha, dtype=float))
        object.__setattr__(self, "mach", np.asarray(self.mach, dtype=float))
        object.__setattr__(self, "values", np.asarray(self.values, dtype=float))
        _check_breakpoints(self.alpha, "alpha")
        _check_breakpoints(self.mach, "mach")
        if self.mach[0] < 0:
            raise AeroTableError("mach breakpoints must be >= 0")
        if self.values.shape != (self.alpha.size, self.mach.size):
            raise AeroTableError("values shape does not match breakpoints")
        if not np.all(np.isfinite(self.values)):
            raise AeroTableError("non-finite table values")


@dataclass(frozen=True)
class Grid3:
    """Coefficient over (mach, alpha1 [deg], alpha2 [deg])."""

    mach: np.ndarray
    alpha1: np.ndarray
    alpha2: np.ndarray
    values: np.ndarray

    def __post_init__(self):
        for name in ("mach", "alpha1", "alpha2", "values"):
            object.__setattr__(self, name, np.asarray(getattr(self, name), dtype=float))
        _check_breakpoints(self.mach, "mach")
        _check_breakpoints(self.alpha1, "alpha1")
        _check_breakpoints(self.alpha2, "alpha2")
        if self.values.shape != (self.mach.size, self.alpha1.size, self.alpha2.size):
            raise AeroTableError("values shape does not match breakpoints")
        if not np.all(np.isfinite(self.values)):
            raise AeroTableError("non-finite table values")


@dataclass(frozen=True)
class Table1:
    """Scalar coefficient over mach."""

    mach: np.ndarray
    values: np.ndarray

    def __post_init__(self):
        object.__setattr__(self, "mach", np.asarray(self.mach, dtype=float))
        object.__setattr__(self, "values", np.asarray(self.values, dtype=float))
        _check_breakpoints(self.mach, "mach")
        if self.values.shape != self.mach.shape:
            raise AeroTableError("values shape does not match breakpoints")


def _bracket(b: np.ndarray, x: float) -> tuple[int, float, float]:
    """Clamped cell index, barycentric weight, and patch slope denominator.

    Returns (i, s, inv_dx) with x ~ b[i] + s*(b[i+1]-b[i]), s clamped to
    [0, 1]. Queries exactly at a breakpoint use the right-sided cell.
    """
    n = b.size
    if x <= b[0]:
        i, s = 0, 0.0 if x < b[0] else 0.0
        inv = 0.0 if x < b[0] else 1.0 / (b[1] - b[0])
        return i, s, inv
    if x >= b[n - 1]:
        return n - 2, 1.0, 0.0
    i = int(np.searchsorted(b, x, side="right") - 1)
    i = min(max(i, 0), n - 2)
    dx = b[i + 1] - b[i]
    return i, (x - b[i]) / dx, 1.0 / dx


def interp2(g: Grid2, alpha_deg: float, mach: float) -> float:
    """Bilinearly interpolated (and edge-clamped) table value."""
    v, _, _ = interp2_grad(g, alpha_deg, mach)
    return v


def interp2_grad(g: Grid2, alpha_deg: float, mach: float) -> tuple[float, float, float]:
    """Value and patch gradient (d/dalpha_deg, d/dmach)."""
    if not (math.isfinite(alpha_deg) and math.isfinite(mach)):
        raise AeroTableError("non-finite interpolation query")
    ia, sa, inva = _bracket(g.alpha, alpha_deg)
    im, sm, invm = _bracket(g.mach, mach)
    v00 = g.values[ia, im]
    v01 = g.values[ia, im + 1]
    v10 = g.values[ia + 1, im]
    v11 = g.values[ia + 1, im + 1]
    v0 = v00 + sm * (v01 - v00)
    v1 = v10 + sm * (v11 - v10)
    val = v0 + sa * (v1 - v0)
    dda = (v1 - v0) * inva
    ddm = ((v01 - v00) + sa * ((v11 - v10) - (v01 - v00))) * invm
    return float(val), float(dda), float(ddm)


def interp3(g: Grid3, mach: float, alpha1_deg: float, alpha2_deg: float) -> float:
    """Trilinearly interpolated (and edge-clamped) table value."""
    v, _, _, _ = interp3_grad(g, mach, alpha1_deg, alpha2_deg)
    return v


def interp3_grad(
    g: Grid3, mach: float, alpha1_deg: float, alpha2_deg: float
) -> tuple[float, float, float, float]:
    """Value and patch gradient (d/dmach, d/dalpha1_deg, d/dalpha2_deg)."""
    if not (math.isfinite(mach) and math.isfinite(alpha1_deg) and math.isfinite(alpha2_deg)):
        raise AeroTableError("non-finite interpolation query")
    im, sm, invm = _bracket(g.mach, mach)
    i1, s1, inv1 = _bracket(g.alpha1, alpha1_deg)
    i2, s2, inv2 = _bracket(g.alpha2, alpha2_deg)
    c = g.values[im : im + 2, i1 : i1 + 2, i2 : i2 + 2]
    # Collapse alpha2, then alpha1, then mach.
    c2 = c[:, :, 0] + s2 * (c[:, :, 1] - c[:, :, 0])
    d2 = (c[:, :, 1] - c[:, :, 0]) * inv2
    c1 = c2[:, 0] + s1 * (c2[:, 1] - c2[:, 0])
    d1 = (c2[:, 1] - c2[:, 0]) * inv1
    dd2 = d2[:, 0] + s1 * (d2[:, 1] - d2[:, 0])
    val = c1[0] + sm * (c1[1] - c1[0])
    ddm = (c1[1] - c1[0]) * invm
    dd1 = d1[0] + sm * (d1[1] - d1[0])
    dd2 = dd2[0] + sm * (dd2[1] - dd2[0])
    return float(val), float(ddm), float(dd1), float(dd2)


def interp1_grad(t: Table1, mach: float) -> tuple[float, float]:
    i, s, inv = _bracket(t.mach, mach)
    v0, v1 = t.values[i], t.values[i + 1]
    return float(v0 + s * (v1 - v0)), float((v1 - v0) * inv)


def build_modified_table(raw: Grid2) -> Grid2:
    """Fold csc(alpha) into a raw lift/moment table and pin alpha=0 to 0.

    The raw table may include an alpha=0 row only if its coefficients are
    exactly zero there (anything else cannot be csc-scaled consistently).
    """
    alpha = raw.alpha
    if alpha[0] < 0:
        raise AeroTableError("raw table must not contain negative alpha")
    if alpha[0] == 0.0:
        if np.any(raw.values[0, :] != 0.0):
            raise AeroTableError("raw table has nonzero coefficients at alpha=0")
        nz_alpha = alpha[1:]
        nz_values = raw.values[1:, :]
    else:
        nz_alpha = alpha
        nz_values = raw.values
    scaled = nz_values / np.sin(np.radians(nz_alpha))[:, None]
    out_alpha = np.concatenate(([0.0], nz_alpha))
    out_values = np.vstack([np.zeros((1, raw.mach.size)), scaled])
    return Grid2(out_alpha, raw.mach, out_values)


def fit_drag_polar(
    samples: list[tuple[float, float, float, float, float, float]],
    mach_bins: np.ndarray | None = None,
) -> tuple[Table1, Table1]:
    """Fit the induced-drag polar per mach bin.

    Each sample is (mach, alpha1_deg, alpha2_deg, f_l1, f_l2, f_d). Per bin
    the lower convex-hull surface of (f_l^2 total, f_d) is extracted and
    f_d ~ c_lin*(cos a2 * f_l1^2 + cos a1 * f_l2^2) + c_cst*(f_l1^2 + f_l2^2)
    is least-squares fitted to the surface points.
    """
    if not samples:
        raise AeroTableError("no drag-polar samples")
    arr = np.asarray(samples, dtype=float)
    if mach_bins is None:
        mach_bins = np.unique(arr[:, 0])
    mach_bins = np.asarray(mach_bins, dtype=float)
    lin = np.empty(mach_bins.size)
    cst = np.empty(mach_bins.size)
    for k, mbin in enumerate(mach_bins):
        rows = arr[np.isclose(arr[:, 0], mbin)]
        rows = rows[(rows[:, 3] != 0.0) | (rows[:, 4] != 0.0)]
        if rows.shape[0] < 3:
            raise AeroTableError(f"mach bin {mbin}: fewer than 3 usable samples")
        # Lower-hull screening runs per incidence condition: it rejects
        # above-polar scatter without collapsing every condition onto the
        # single globally flattest drag line.
        keep = np.zeros(rows.shape[0], dtype=bool)
        cond = np.round(rows[:, 1:3], 9)
        for pair in np.unique(cond, axis=0):
            idx = np.where((cond == pair).all(axis=1))[0]
            sub = rows[idx]
            mask = _lower_hull_mask(sub[:, 3] ** 2 + sub[:, 4] ** 2, sub[:, 5])
            keep[idx[mask]] = True
        sel = rows[keep]
        a1 = np.radians(sel[:, 1])
        a2 = np.radians(sel[:, 2])
        x1 = np.cos(a2) * sel[:, 3] ** 2 + np.cos(a1) * sel[:, 4] ** 2
        x2 = sel[:, 3] ** 2 + sel[:, 4] ** 2
        design = np.column_stack([x1, x2])
        sing = np.linalg.svd(design, compute_uv=False)
        if sing[-1] <= 1e-10 * sing[0]:
            raise AeroTableError(f"mach bin {mbin}: rank-deficient drag-polar fit")
        coef, *_ = np.linalg.lstsq(design, sel[:, 5], rcond=None)
        lin[k], cst[k] = coef
    return Table1(mach_bins, lin), Table1(mach_bins, cst)


def _lower_hull_mask(x: np.ndarray, y: np.ndarray) -> np.ndarray:
    """Mark the points lying on the lower convex boundary of (x, y)."""
    order = np.lexsort((y, x))
    hull: list[int] = []
    for idx in order:
        while len(hull) >= 2:
            i, j = hull[-2], hull[-1]
            cross = (x[j] - x[i]) * (y[idx] - y[i]) - (y[j] - y[i]) * (x[idx] - x[i])
            if cross <= 1e-12 * max(1.0, abs(x[idx] - x[i]) * max(abs(y[j]), 1.0)):
                hull.pop()
            else:
                break
        hull.append(idx)
    mask = np.zeros(x.size, dtype=bool)
    # Keep every point within tolerance of the piecewise-linear lower boundary.
    hx, hy = x[hull], y[hull]
    for i in range(x.size):
        yb = np.interp(x[i], hx, hy)
        if y[i] <= yb + 1e-9 * max(1.0, abs(yb)):
            mask[i] = True
    return mask


@dataclass(frozen=True)
class AeroDatabase:
    """Immutable bundle of body and fin coefficient tables.

    Body tables are normalized so the force/moment formulas need only the
    density ratio and velocity: drag = 0.5*rho_r*cd*|v|*v (cd in kg/m), and
    likewise for the csc-modified lift/moment tables. Fin lift scale maps a
    normalized command through |v|^2 directly to Newtons (density and area
    factors are folded into the table; see reference_area_note).
    """

    cd_body: Grid2
    cl_mod: Grid2
    cm_mod: Grid2
    fin_lift_scale: tuple[Grid3, Grid3]
    fin_bound_lo: tuple[Grid3, Grid3]
    fin_bound_hi: tuple[Grid3, Grid3]
    polar_lin: Table1
    polar_cst: Table1
    reference_area_note: str = field(
        default="Coefficients absorb reference area and the 0.5*rho0 factor: "
        "body tables are in kg/m (kg for moment), fin lift scale in kg/m, "
        "fin force = command * |v|^2 * scale with no separate density term."
    )

    def __post_init__(self):
        for pair in (self.fin_bound_lo, self.fin_bound_hi):
            for g in pair:
                if g.values.size == 0:
                    raise AeroTableError("empty fin bound table")
        for i in range(2):
            if np.any(self.fin_bound_lo[i].values > 0) or np.any(self.fin_bound_hi[i].values < 0):
                raise AeroTableError("fin bounds must satisfy lo <= 0 <= hi pointwise")
        for g, name in ((self.cl_mod, "cl_mod"), (self.cm_mod, "cm_mod")):
            if g.alpha[0] == 0.0 and np.any(g.values[0, :] != 0.0):
                raise AeroTableError(f"{name} must be exactly 0 at alpha=0")

    def fin_bounds(
        self, mach: float, alpha1_deg: float, alpha2_deg: float
    ) -> tuple[np.ndarray, np.ndarray]:
        """Clamped-interpolated command bounds (lo <= 0 <= hi, per fin plane)."""
        lo = np.array(
            [interp3(self.fin_bound_lo[i], mach, alpha1_deg, alpha2_deg) for i in range(2)]
        )
        hi = np.array(
            [interp3(self.fin_bound_hi[i], mach, alpha1_deg, alpha2_deg) for i in range(2)]
        )
        return lo, hi


AERODB_VERSION = 1


def _grid2_doc(g: Grid2) -> dict:
    return {"alpha_deg": g.alpha.tolist(), "mach": g.mach.tolist(), "values": g.values.tolist()}


def _grid3_doc(g: Grid3) -> dict:
    return {
        "mach": g.mach.tolist(),
        "alpha1_deg": g.alpha1.tolist(),
        "alpha2_deg": g.alpha2.tolist(),
        "values": g.values.tolist(),
    }


def save_database(db: AeroDatabase, path: str) -> None:
    doc = {
        "aerodb_version": AERODB_VERSION,
        "cd_body": _grid2_doc(db.cd_body),
        "cl_mod": _grid2_doc(db.cl_mod),
        "cm_mod": _grid2_doc(db.cm_mod),
        "fin_lift_scale": [_grid3_doc(g) for g in db.fin_lift_scale],
        "fin_bound_lo": [_grid3_doc(g) for g in db.fin_bound_lo],
        "fin_bound_hi": [_grid3_doc(g) for g in db.fin_bound_hi],
        "polar_lin": {"mach": db.polar_lin.mach.tolist(), "values": db.polar_lin.values.tolist()},
        "polar_cst": {"mach": db.polar_cst.mach.tolist(), "values": db.polar_cst.values.tolist()},
        "reference_area_note": db.reference_area_note,
    }
    with open(path, "w", encoding="utf-8", newline="\n") as f:
        json.dump(doc, f, indent=1)
        f.write("\n")


def load_database(path: str) -> AeroDatabase:
    with open(path, encoding="utf-8") as f:
        doc = json.load(f)
    if doc.get("aerodb_version") != AERODB_VERSION:
        raise AeroTableError(f"unsupported aerodb_version {doc.get('aerodb_version')!r}")

    def g2(d):
        return Grid2(np.array(d["alpha_deg"]), np.array(d["mach"]), np.array(d["values"]))

    def g3(d):
        return Grid3(
            np.array(d["mach"]),
            np.array(d["alpha1_deg"]),
            np.array(d["alpha2_deg"]),
            np.array(d["values"]),
        )

    return AeroDatabase(
        cd_body=g2(doc["cd_body"]),
        cl_mod=g2(doc["cl_mod"]),
        cm_mod=g2(doc["cm_mod"]),
        fin_lift_scale=tuple(g3(d) for d in doc["fin_lift_scale"]),
        fin_bound_lo=tuple(g3(d) for d in doc["fin_bound_lo"]),
        fin_bound_hi=tuple(g3(d) for d in doc["fin_bound_hi"]),
        polar_lin=Table1(np.array(doc["polar_lin"]["mach"]), np.array(doc["polar_lin"]["values"])),
        polar_cst=Table1(np.array(doc["polar_cst"]["mach"]), np.array(doc["polar_cst"]["values"])),
        reference_area_note=doc.get("reference_area_note", ""),
    )


SWEEP_HEADER = [
    "mach",
    "alpha1_deg",
    "alpha2_deg",
    "fin1_cmd",
    "fin2_cmd",
    "fx",
    "fy",
    "fz",
    "mx",
    "my",
    "mz",
]

# Sweep reference condition: unit density ratio, flow straight down the Up
# axis at mach * C0_REF, so the wind frame coincides with the sweep frame and
# fin lift/drag read off the force components directly.


@dataclass
class IngestReport:
    """Row-level rejection log produced while building a database from sweeps."""

    rejected: list[tuple[int, str]] = field(default_factory=list)
    n_rows: int = 0

    def reject(self, line: int, reason: str) -> None:
        self.rejected.append((line, reason))


def ingest_sweeps(path: str) -> tuple[AeroDatabase, IngestReport]:
    """Build a validated AeroDatabase from a sweep CSV (see SWEEP_HEADER).

    Body tables come from the zero-command rows; fin lift scale from the
    +/-0.5 command rows; command bounds from the +/-1 rows of the
    clipped-linear fin response; the drag polar from every commanded row.
    """
    from .environment import C0_REF

    report = IngestReport()
    rows: dict[tuple[float, float, float, float, float], np.ndarray] = {}
    with open(path, encoding="utf-8", newline="") as f:
        reader = csv.reader(f)
        header = next(reader, None)
        if header != SWEEP_HEADER:
            raise AeroTableError(f"sweep header mismatch: {header}")
        for ln, row in enumerate(reader, start=2):
            report.n_rows += 1
            if len(row) != len(SWEEP_HEADER):
                report.reject(ln, "wrong column count")
                continue
            try:
                vals = np.array([float(c) for c in row])
            except ValueError:
                report.reject(ln, "non-numeric field")
                continue
            if not np.all(np.isfinite(vals)):
                report.reject(ln, "non-finite field")
                continue
            key = tuple(np.round(vals[:5], 9))
            if key in rows:
                raise AeroTableError(f"line {ln}: duplicate grid point {key}")
            rows[key] = vals[5:]

    if not rows:
        raise AeroTableError("sweep file contains no usable rows")

    keys = np.array(list(rows.keys()))
    machs = np.unique(keys[:, 0])
    commanded = keys[(keys[:, 3] != 0.0) | (keys[:, 4] != 0.0)]
    if commanded.size == 0:
        raise AeroTableError("sweep contains no fin command probes")
    alpha1s = np.unique(commanded[:, 1])
    alpha2s = np.unique(commanded[:, 2])

    def fm(key):
        k = tuple(np.round(np.asarray(key, dtype=float), 9))
        if k not in rows:
            raise AeroTableError(f"sweep grid incomplete: missing row {k}")
        return rows[k]

    # --- body tables from the alpha2 = 0, zero-command plane sweep.
    zero_cmd = keys[(keys[:, 3] == 0.0) & (keys[:, 4] == 0.0) & (keys[:, 2] == 0.0)]
    body_alpha = np.unique(zero_cmd[zero_cmd[:, 1] >= 0.0][:, 1])
    if body_alpha.size < 3:
        raise AeroTableError("need at least 3 non-negative alpha1 stations for body tables")
    cd = np.empty((body_alpha.size, machs.size))
    cl_raw = np.empty((body_alpha.size, machs.size))
    cm_raw = np.empty((body_alpha.size, machs.size))
    for j, m in enumerate(machs):
        vref = m * C0_REF
        for i, a in enumerate(body_alpha):
            fxyz = fm((m, a, 0.0, 0.0, 0.0))
            f, mom = fxyz[:3], fxyz[3:]
            # Flow is -Up: drag along +Up, lift along +N, moment about +E.
            cd[i, j] = 2.0 * f[2] / vref**2
            cl_raw[i, j] = 2.0 * f[0] / vref**2
            cm_raw[i, j] = 2.0 * mom[1] / vref**2
    cd_body = Grid2(body_alpha, machs, cd)
    nz = body_alpha > 0.0
    cl_mod = build_modified_table(Grid2(body_alpha[nz], machs, cl_raw[nz]))
    cm_mod = build_modified_table(Grid2(body_alpha[nz], machs, cm_raw[nz]))

    # --- fin tables over the full (mach, alpha1, alpha2) grid.
    shape = (machs.size, alpha1s.size, alpha2s.size)
    scale = [np.empty(shape), np.empty(shape)]
    lo = [np.empty(shape), np.empty(shape)]
    hi = [np.empty(shape), np.empty(shape)]
    polar_samples: list[tuple[float, float, float, float, float, float]] = []
    for im, m in enumerate(machs):
        vref2 = (m * C0_REF) ** 2
        for i1, a1 in enumerate(alpha1s):
            for i2, a2 in enumerate(alpha2s):
                base = fm((m, a1, a2, 0.0, 0.0))
                for fin in range(2):
                    lift_axis = fin  # fin 1 lifts along sweep N, fin 2 along E
                    resp = {}
                    for lvl in (-1.0, -0.5, 0.5, 1.0):
                        cmd = [0.0, 0.0]
                        cmd[fin] = lvl
                        delta = fm((m, a1, a2, cmd[0], cmd[1])) - base
                        resp[lvl] = delta
                        if lvl != 0.0:
                            polar_samples.append(
                                (m, a1, a2, delta[0], delta[1], delta[2])
                            )
                    k = (resp[0.5][lift_axis] - resp[-0.5][lift_axis]) / 1.0 / vref2
                    if abs(k) < 1e-14:
                        raise AeroTableError(
                            f"zero fin response at mach={m}, alpha=({a1},{a2}), fin {fin+1}"
                        )
                    hi_val = resp[1.0][lift_axis] / (k * vref2)
                    lo_val = resp[-1.0][lift_axis] / (k * vref2)
                    if hi_val < 0.5 - 1e-9 or lo_val > -0.5 + 1e-9:
                        raise AeroTableError(
                            f"fin bounds tighter than the 0.5 probe at mach={m}, "
                            f"alpha=({a1},{a2}); sweep protocol violated"
                        )
                    scale[fin][im, i1, i2] = k
                    hi[fin][im, i1, i2] = min(hi_val, 1.0)
                    lo[fin][im, i1, i2] = max(lo_val, -1.0)

    # Axisymmetry fallback: synthesize a 0 slice when the sweep lacks one.
    def with_zero_slice(bps: np.ndarray, arrs: list[np.ndarray], axis: int):
        if 0.0 in bps:
            return bps, arrs
        below = bps < 0.0
        above = bps > 0.0
        ib = int(np.where(below)[0][-1])
        ia = int(np.where(above)[0][0])
        new_bps = np.sort(np.append(bps, 0.0))
        out = []
        for a in arrs:
            lo_sl = np.take(a, ib, axis=axis)
            hi_sl = np.take(a, ia, axis=axis)
            mid = 0.5 * (lo_sl + hi_sl)
            out.append(np.insert(a, ia, mid, axis=axis))
        return new_bps, out

    tabs = scale + lo + hi
    alpha1_b, tabs = with_zero_slice(alpha1s, tabs, axis=1)
    alpha2_b, tabs = with_zero_slice(alpha2s, tabs, axis=2)
    scale, lo, hi = tabs[0:2], tabs[2:4], tabs[4:6]

    polar_lin, polar_cst = fit_drag_polar(polar_samples, machs)

    def g3(a):
        return Grid3(machs, alpha1_b, alpha2_b, a)

    db = AeroDatabase(
        cd_body=cd_body,
        cl_mod=cl_mod,
        cm_mod=cm_mod,
        fin_lift_scale=(g3(scale[0]), g3(scale[1])),
        fin_bound_lo=(g3(lo[0]), g3(lo[1])),
        fin_bound_hi=(g3(hi[0]), g3(hi[1])),
        polar_lin=polar_lin,
        polar_cst=polar_cst,
    )
    return db, report


def fin_bounds(db: AeroDatabase, mach: float, alpha1_deg: float, alpha2_deg: float):
    """Module-level alias of AeroDatabase.fin_bounds."""
    return db.fin_bounds(mach, alpha1_deg, alpha2_deg)
