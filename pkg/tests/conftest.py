import numpy as np
import pytest

from dspolariton.config import build_initial_state, build_params, load_preset
from dspolariton.ds_core import GHZ, MHZ, RAD_PER_NS, THZ, SystemParams, build_dressed_frame


def preset_params(name: str) -> SystemParams:
    return build_params(load_preset(name))


@pytest.fixture
def fig3_params():
    return preset_params("fig3")


@pytest.fixture
def fig6_params():
    return preset_params("fig6")


@pytest.fixture
def fig6_frame(fig6_params):
    return build_dressed_frame(fig6_params)


@pytest.fixture
def fig6_initial():
    return build_initial_state(load_preset("fig6"))


@pytest.fixture
def fig9_params():
    return preset_params("fig9")


@pytest.fixture
def fig9_frame(fig9_params):
    return build_dressed_frame(fig9_params)


def random_params(rng: np.random.Generator) -> SystemParams:
    """Parameters drawn across the ranges the model is used in."""
    delta = rng.uniform(0.2, 20.0) * THZ * rng.choice([-1.0, 1.0])
    omega = rng.uniform(0.3, 3.0) * THZ
    kappa = rng.uniform(0.05, 1.0) * THZ
    params = SystemParams(
        omega=omega,
        delta=delta,
        kappa=kappa,
        gamma_coll=rng.uniform(0.01, 30.0) * GHZ,
        gamma_spont=rng.uniform(0.005, 0.2) * RAD_PER_NS,
        gamma_cav=rng.uniform(10.0, 500.0) * MHZ,
        delta_cav=0.0,
        temperature=rng.uniform(300.0, 800.0),
    )
    frame = build_dressed_frame(params)
    return params.replace(delta_cav=frame.omega_rabi + rng.uniform(-0.01, 0.01))


@pytest.fixture
def rng():
    return np.random.default_rng(20240611)
