"""Shared fixtures: reference metrics are integrated once per session."""

import pytest

from g2flow.metric.b7 import B7Params
from g2flow.metric.flow import flow_metric
from g2flow.taubnut.adiabatic import taub_nut_flow

REFERENCE_ABAR = 1.0 / 128.0


@pytest.fixture(scope="session")
def alc_params() -> B7Params:
    return B7Params.from_r0_abar(1.0, REFERENCE_ABAR)


@pytest.fixture(scope="session")
def alc_metric(alc_params):
    """Reference ALC member to t = 400."""
    return flow_metric(alc_params, t_max=400.0, rel_tol=1e-10)


@pytest.fixture(scope="session")
def ell(alc_metric) -> float:
    assert alc_metric.ell is not None
    return alc_metric.ell


@pytest.fixture(scope="session")
def tn_flow():
    """Taub-NUT with m = 1 as the lam = 0 rescaled flow."""
    return taub_nut_flow(1.0, t_max=10.0, rel_tol=1e-11)
