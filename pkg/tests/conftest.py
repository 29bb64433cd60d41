import math

import numpy as np
import pytest
from hypothesis import HealthCheck, settings
from hypothesis import strategies as st

from hqmkit import DemandSeries, HqmParams

settings.register_profile("default", max_examples=60, deadline=None, suppress_health_check=[HealthCheck.too_slow])
settings.load_profile("default")


def reference_hqm(params: HqmParams, a, b):
    """Literal cell-by-cell HQM written with plain lists, independent of the package.

    Returns per-tick (m_hat, n_hat, f, g) after each step and the list of y-vectors.
    """
    T = params.traverse_ticks
    cap = params.capacity * params.tick_seconds / 3600.0
    unit = params.platoon_size / params.condensation
    x = [0.0] * T
    y = [0.0] * T
    out, ys = [], []
    for at, bt in zip(a, b):
        f = min(x[0], params.priority * cap)
        residual = min(y[0], cap - f)
        g = math.floor(residual / unit + 1e-9) * unit if residual > 0 else 0.0
        if T == 1:
            x = [x[0] + at - f]
            y = [y[0] + bt / params.condensation - g]
        else:
            x = [x[0] + x[1] - f] + x[2:] + [at]
            y = [y[0] + y[1] - g] + y[2:] + [bt / params.condensation]
        y = [round(v / unit) * unit for v in y]
        out.append((sum(x), sum(y), f, g))
        ys.append(list(y))
    return np.array(out), ys


@st.composite
def hqm_params(draw, max_T=12, dt=None):
    T = draw(st.integers(1, max_T))
    rho = draw(st.floats(0.0, 1.0))
    l = draw(st.integers(1, 12))
    gamma = draw(st.floats(1.05, 5.0))
    tick = dt if dt is not None else draw(st.sampled_from([1.0, 2.0, 5.0, 10.0]))
    # capacity large enough for a platoon to fit in one tick most of the time
    F = draw(st.floats(0.0, 3.0)) * 3600.0 * l / gamma / tick
    return HqmParams(T, rho, F, gamma, l, tick)


@st.composite
def demand_for(draw, params: HqmParams, min_len=1, max_len=80):
    n = draw(st.integers(min_len, max_len))
    a = draw(st.lists(st.floats(0.0, 6.0), min_size=n, max_size=n))
    k = draw(st.lists(st.integers(0, 2), min_size=n, max_size=n))
    return DemandSeries(np.array(a), np.array(k) * params.platoon_size, params.tick_seconds, params.platoon_size)


@pytest.fixture
def rng():
    return np.random.default_rng(12345)
