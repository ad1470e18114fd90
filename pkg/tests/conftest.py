import math

import numpy as np
import pytest

from aeroreach import synthetic
from aeroreach.aerotables import ingest_sweeps
from aeroreach.dynamics import VehicleParams
from aeroreach.environment import kerbin_env
from aeroreach.kernels import common as kc


@pytest.fixture(scope="session")
def aerodb(tmp_path_factory):
    path = tmp_path_factory.mktemp("fixtures") / "sweeps.csv"
    synthetic.synthesize_sweeps(str(path))
    db, report = ingest_sweeps(str(path))
    assert report.rejected == []
    return db


@pytest.fixture(scope="session")
def vehicle():
    return VehicleParams(
        m_dry=10088.0,
        m_wet=19516.0,
        j_dry=np.array([4.4e5, 4.4e5, 0.040e5]),
        j_wet=np.array([5.6e5, 5.6e5, 0.053e5]),
        isp=300.0,
        g0=9.80665,
        u_min=180e3,
        u_max=936e3,
        r_engine_b=np.array([0.0, 0.0, -4.1]),
        r_fins_b=np.array([0.0, 0.0, 9.2]),
        gimbal_max=math.radians(10.5),
        omega_max=math.radians(15.0),
        c_damp=10.0,
        alpha_max=math.radians(40.0),
        q_max=8e4,
        chi_max=1e6 * math.pi / 180.0,
        v_small=100.0,
    )


@pytest.fixture(scope="session")
def env():
    return kerbin_env()


CTCS_SCALES = np.array([1.0, 20.0, 10.0, 0.1, 5e-4, 1e-6])


@pytest.fixture(scope="session")
def packed(vehicle, env, aerodb):
    pp = kc.pack_params(vehicle, env, CTCS_SCALES)
    tb = kc.pack_tables(aerodb)
    return pp, tb


def random_flight_state(rng):
    """A plausible mid-descent state: subsonic-to-supersonic, moderate tilt."""
    m = rng.uniform(10500.0, 19500.0)
    r = np.array([rng.uniform(-2e3, 2e3), rng.uniform(-2e3, 4e3), rng.uniform(1e3, 14e3)])
    speed = rng.uniform(60.0, 500.0)
    direction = np.array([rng.uniform(-0.4, 0.4), rng.uniform(-0.7, 0.3), -1.0])
    v = speed * direction / np.linalg.norm(direction)
    att = rng.uniform(-0.9, 0.9, size=2)
    om = rng.uniform(-0.2, 0.2, size=2)
    return np.concatenate([[m], r, v, att, om])


def random_control(rng, propulsive):
    if propulsive:
        tilt = rng.uniform(-0.15, 0.15, size=2)
        mag = rng.uniform(2e5, 9e5)
        u_t = mag * np.array([tilt[0], tilt[1], 1.0])
        u_t /= np.linalg.norm([tilt[0], tilt[1], 1.0])
    else:
        u_t = np.zeros(3)
    fin = rng.uniform(-0.9, 0.9, size=2)
    return np.concatenate([u_t, fin])
