"""Scenario configuration: JSON schema, validation, defaults, hashing.

Field names carry explicit unit suffixes (angles that humans edit are in
degrees, internal structures are radians) because unit slips dominate the
bug population in this domain. The config hash is a sha256 over the
canonical (sorted, whitespace-free) JSON and is embedded in every output
document so results stay traceable to their inputs.
"""

from __future__ import annotations

import hashlib
import json
import math
import os
from dataclasses import dataclass

import numpy as np

from . import __version__
from .aerotables import AeroDatabase, load_database
from .dynamics import VehicleParams
from .environment import EnvParams
from .scp import BoundaryConditions, ScpParams
from .transcription import DiscretizationConfig, DilatedTime

CONFIG_VERSION = 1


class ConfigError(ValueError):
    """Malformed or physically inconsistent scenario configuration."""


@dataclass
class ReachSettings:
    feasibility_tol: float = 1e-3
    max_iters_per_expansion: int = 40


@dataclass
class Scenario:
    env: EnvParams
    vehicle: VehicleParams
    boundary: BoundaryConditions
    disc: DiscretizationConfig
    scp: ScpParams
    reach: ReachSettings
    tan_glideslope: float
    init_dil: DilatedTime
    seed: int
    aerodb_path: str
    config_hash: str
    raw: dict

    def load_aerodb(self) -> AeroDatabase:
        return load_database(self.aerodb_path)


def default_scenario_dict(aerodb_path: str = "aerodb.json", seed: int = 20260809) -> dict:
    """The bundled reference scenario (small dense fast-spinning planet)."""
    return {
        "config_version": CONFIG_VERSION,
        "seed": seed,
        "aerodb_path": aerodb_path,
        "env": {
            "mu_m3_s2": 3.5316e12,
            "rotation_period_s": 21600.0,
            "planet_radius_m": 600e3,
            "rho0_kg_m3": 1.225,
            "t0_k": 288.15,
            "atm_scale": 1.25,
        },
        "vehicle": {
            "m_dry_kg": 10088.0,
            "m_wet_kg": 19516.0,
            "j_dry_kg_m2": [4.4e5, 4.4e5, 0.040e5],
            "j_wet_kg_m2": [5.6e5, 5.6e5, 0.053e5],
            "isp_s": 300.0,
            "g0_m_s2": 9.80665,
            "u_min_n": 180e3,
            "u_max_n": 936e3,
            "r_engine_b_m": [0.0, 0.0, -4.1],
            "r_fins_b_m": [0.0, 0.0, 9.2],
            "gimbal_max_deg": 10.5,
            "omega_max_deg_s": 15.0,
            "c_damp_1_s": 10.0,
        },
        "constraints": {
            "glideslope_deg": 60.0,
            "alpha_max_deg": 40.0,
            "q_max_pa": 8.0e4,
            "chi_max_pa_deg": 1.0e6,
            "v_small_m_s": 100.0,
        },
        "boundary": {
            "r0_m": [500.0, 2500.0, 15000.0],
            "v0_m_s": [0.0, -150.0, -350.0],
            "att0_rad": [-0.98, 0.0],
            "omega0_rad_s": [0.0, 0.0],
            "m0_kg": 19516.0,
            "rf_m": [0.0, 0.0, 0.0],
            "vf_m_s": [0.0, 0.0, 0.0],
            "attf_rad": [0.0, 0.0],
            "omegaf_rad_s": [0.0, 0.0],
        },
        "discretization": {
            "n_nodes": 41,
            "ctcs_scales": [1.0, 20.0, 10.0, 0.1, 5e-4, 1e-6],
            "ctcs_eps": 1e-6,
            "rtol": 1e-8,
            "atol": 1e-10,
            "rate_ref_rad_s": 0.25,
        },
        "scp": {
            "beta": 2.0,
            "alpha": 2.0,
            "rho0": 0.0,
            "rho1": 0.25,
            "rho2": 0.7,
            "w_init": 8.0,
            "w_m": 1000.0,
            "w_n": 50.0,
            "w_l": 100.0,
            "max_iters": 150,
            "convergence_tol": 1e-5,
            "dil_min_s": 5.0,
            "dil_max_s": 400.0,
            "hull_mu_weight": 100.0,
        },
        "init_dilations_s": [50.0, 30.0],
        "reach": {
            "feasibility_tol": 1e-3,
            "max_iters_per_expansion": 40,
        },
    }


def config_hash(doc: dict) -> str:
    canon = json.dumps(doc, sort_keys=True, separators=(",", ":")).encode()
    return hashlib.sha256(canon).hexdigest()[:16]


def _need(doc: dict, key: str, section: str):
    if key not in doc:
        raise ConfigError(f"missing field {section}.{key}")
    return doc[key]


def scenario_from_dict(doc: dict, base_dir: str = ".", threads: int | None = None) -> Scenario:
    if doc.get("config_version") != CONFIG_VERSION:
        raise ConfigError(f"unsupported config_version {doc.get('config_version')!r}")

    e = doc["env"]
    env = EnvParams(
        mu=_need(e, "mu_m3_s2", "env"),
        omega_planet=np.array([2.0 * math.pi / _need(e, "rotation_period_s", "env"), 0.0, 0.0]),
        r_center=np.array([0.0, 0.0, -_need(e, "planet_radius_m", "env")]),
        rho0=e.get("rho0_kg_m3", 1.225),
        t0=e.get("t0_k", 288.15),
        planet_radius=e["planet_radius_m"],
        atm_scale=e.get("atm_scale", 1.0),
    )

    v = doc["vehicle"]
    c = doc["constraints"]
    vehicle = VehicleParams(
        m_dry=_need(v, "m_dry_kg", "vehicle"),
        m_wet=_need(v, "m_wet_kg", "vehicle"),
        j_dry=np.array(_need(v, "j_dry_kg_m2", "vehicle")),
        j_wet=np.array(_need(v, "j_wet_kg_m2", "vehicle")),
        isp=_need(v, "isp_s", "vehicle"),
        g0=v.get("g0_m_s2", 9.80665),
        u_min=_need(v, "u_min_n", "vehicle"),
        u_max=_need(v, "u_max_n", "vehicle"),
        r_engine_b=np.array(_need(v, "r_engine_b_m", "vehicle")),
        r_fins_b=np.array(_need(v, "r_fins_b_m", "vehicle")),
        gimbal_max=math.radians(_need(v, "gimbal_max_deg", "vehicle")),
        omega_max=math.radians(_need(v, "omega_max_deg_s", "vehicle")),
        c_damp=_need(v, "c_damp_1_s", "vehicle"),
        alpha_max=math.radians(_need(c, "alpha_max_deg", "constraints")),
        q_max=_need(c, "q_max_pa", "constraints"),
        chi_max=math.radians(_need(c, "chi_max_pa_deg", "constraints")),
        v_small=_need(c, "v_small_m_s", "constraints"),
    )

    b = doc["boundary"]
    x0 = np.concatenate(
        [
            [_need(b, "m0_kg", "boundary")],
            np.asarray(_need(b, "r0_m", "boundary"), dtype=float),
            np.asarray(_need(b, "v0_m_s", "boundary"), dtype=float),
            np.asarray(_need(b, "att0_rad", "boundary"), dtype=float),
            np.asarray(_need(b, "omega0_rad_s", "boundary"), dtype=float),
        ]
    )
    xf = np.concatenate(
        [
            np.asarray(_need(b, "rf_m", "boundary"), dtype=float),
            np.asarray(_need(b, "vf_m_s", "boundary"), dtype=float),
            np.asarray(_need(b, "attf_rad", "boundary"), dtype=float),
            np.asarray(_need(b, "omegaf_rad_s", "boundary"), dtype=float),
        ]
    )
    boundary = BoundaryConditions(x0, xf)
    if not (vehicle.m_dry < x0[0] <= vehicle.m_wet):
        raise ConfigError("initial mass must lie in (m_dry, m_wet]")

    d = doc.get("discretization", {})
    disc = DiscretizationConfig(
        n_nodes=d.get("n_nodes", 41),
        ctcs_scales=tuple(d.get("ctcs_scales", [1.0, 20.0, 10.0, 0.1, 5e-4, 1e-6])),
        ctcs_eps=d.get("ctcs_eps", 1e-6),
        rtol=d.get("rtol", 1e-8),
        atol=d.get("atol", 1e-10),
        length_ref=d.get("length_ref_m", float(np.linalg.norm(x0[1:4]))),
        speed_ref=d.get("speed_ref_m_s", float(np.linalg.norm(x0[4:7]))),
        mass_ref=d.get("mass_ref_kg", vehicle.m_wet),
        rate_ref=d.get("rate_ref_rad_s", 0.25),
    )

    s = doc.get("scp", {})
    scp = ScpParams(
        beta=s.get("beta", 2.0),
        alpha=s.get("alpha", 2.0),
        rho0=s.get("rho0", 0.0),
        rho1=s.get("rho1", 0.25),
        rho2=s.get("rho2", 0.7),
        w_init=s.get("w_init", 8.0),
        w_m=s.get("w_m", 1000.0),
        w_n=s.get("w_n", 50.0),
        w_l=s.get("w_l", 100.0),
        max_iters=int(s.get("max_iters", 150)),
        convergence_tol=s.get("convergence_tol", 1e-5),
        dil_min=s.get("dil_min_s", 5.0),
        dil_max=s.get("dil_max_s", 400.0),
        hull_mu_weight=s.get("hull_mu_weight", 100.0),
        threads=threads if threads is not None else int(s.get("threads", 1)),
    )

    r = doc.get("reach", {})
    reach = ReachSettings(
        feasibility_tol=r.get("feasibility_tol", 1e-3),
        max_iters_per_expansion=int(r.get("max_iters_per_expansion", 40)),
    )

    init_dil = doc.get("init_dilations_s", [50.0, 30.0])
    aerodb_path = doc.get("aerodb_path", "aerodb.json")
    if not os.path.isabs(aerodb_path):
        aerodb_path = os.path.join(base_dir, aerodb_path)

    return Scenario(
        env=env,
        vehicle=vehicle,
        boundary=boundary,
        disc=disc,
        scp=scp,
        reach=reach,
        tan_glideslope=math.tan(math.radians(_need(c, "glideslope_deg", "constraints"))),
        init_dil=DilatedTime(float(init_dil[0]), float(init_dil[1])),
        seed=int(doc.get("seed", 0)),
        aerodb_path=aerodb_path,
        config_hash=config_hash(doc),
        raw=doc,
    )


def load_scenario(path: str, threads: int | None = None) -> Scenario:
    with open(path, encoding="utf-8") as f:
        doc = json.load(f)
    scenario = scenario_from_dict(doc, base_dir=os.path.dirname(os.path.abspath(path)),
                                  threads=threads)
    if not os.path.exists(scenario.aerodb_path):
        raise ConfigError(f"aero database not found: {scenario.aerodb_path}")
    return scenario


def write_scenario(doc: dict, path: str) -> None:
    with open(path, "w", encoding="utf-8", newline="\n") as f:
        json.dump(doc, f, indent=1)
        f.write("\n")


def tool_stamp(cfg_hash: str) -> dict:
    return {"tool_version": __version__, "config_hash": cfg_hash}
