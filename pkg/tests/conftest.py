"""Shared fixtures: benchmark models, a smooth custom model, path builders."""

import math

import numpy as np
import pytest

from jumpgreeks.jump_sde import custom_model, geometric_model, vasicek_model
from jumpgreeks.noise_model import JumpPath

# benchmark parameter set used throughout: lambda=1, r=0.1, T=5, x=100, level=10
RATE = 1.0
R = 0.1
LEVEL = 10.0
HORIZON = 5.0
X0 = 100.0
STRIKE = 100.0


@pytest.fixture
def vasicek():
    return vasicek_model(R, LEVEL, 25.0)


@pytest.fixture
def geometric():
    return geometric_model(R, 0.3)


def make_sin_affine_model():
    """Smooth jump coefficient modulated in all three arguments, affine drift."""
    c0, wt, wa, wx = 0.8, 0.9, 0.7, 0.11
    b0, b1 = 0.3, -0.15

    def phase(t, a, x):
        return wt * t + wa * a + wx * x

    return custom_model(
        c=lambda t, a, x: c0 * math.sin(phase(t, a, x)),
        g=lambda t, x: b0 + b1 * x,
        c_t=lambda t, a, x: c0 * wt * math.cos(phase(t, a, x)),
        c_a=lambda t, a, x: c0 * wa * math.cos(phase(t, a, x)),
        c_x=lambda t, a, x: c0 * wx * math.cos(phase(t, a, x)),
        c_tt=lambda t, a, x: -c0 * wt * wt * math.sin(phase(t, a, x)),
        c_ta=lambda t, a, x: -c0 * wt * wa * math.sin(phase(t, a, x)),
        c_tx=lambda t, a, x: -c0 * wt * wx * math.sin(phase(t, a, x)),
        c_aa=lambda t, a, x: -c0 * wa * wa * math.sin(phase(t, a, x)),
        c_ax=lambda t, a, x: -c0 * wa * wx * math.sin(phase(t, a, x)),
        c_xx=lambda t, a, x: -c0 * wx * wx * math.sin(phase(t, a, x)),
        g_x=lambda t, x: b1,
    )


def make_sin_curved_model():
    """As above but with drift curvature, so the e-derivative integrals and
    the rho corrections are all exercised."""
    c0, wt, wa, wx = 0.8, 0.9, 0.7, 0.11
    b0, b1, b2 = 0.3, -0.15, 0.2

    def phase(t, a, x):
        return wt * t + wa * a + wx * x

    return custom_model(
        c=lambda t, a, x: c0 * math.sin(phase(t, a, x)),
        g=lambda t, x: b0 + b1 * x + b2 * math.sin(x),
        c_t=lambda t, a, x: c0 * wt * math.cos(phase(t, a, x)),
        c_a=lambda t, a, x: c0 * wa * math.cos(phase(t, a, x)),
        c_x=lambda t, a, x: c0 * wx * math.cos(phase(t, a, x)),
        c_tt=lambda t, a, x: -c0 * wt * wt * math.sin(phase(t, a, x)),
        c_ta=lambda t, a, x: -c0 * wt * wa * math.sin(phase(t, a, x)),
        c_tx=lambda t, a, x: -c0 * wt * wx * math.sin(phase(t, a, x)),
        c_aa=lambda t, a, x: -c0 * wa * wa * math.sin(phase(t, a, x)),
        c_ax=lambda t, a, x: -c0 * wa * wx * math.sin(phase(t, a, x)),
        c_xx=lambda t, a, x: -c0 * wx * wx * math.sin(phase(t, a, x)),
        g_x=lambda t, x: b1 + b2 * math.cos(x),
        g_xx=lambda t, x: -b2 * math.sin(x),
    )


@pytest.fixture
def sin_affine_model():
    return make_sin_affine_model()


@pytest.fixture
def sin_curved_model():
    return make_sin_curved_model()


def random_path(rng, n, horizon=HORIZON, min_gap=0.02, amp_scale=1.0):
    """A jump path with n jumps and no gap smaller than min_gap."""
    while True:
        times = np.sort(rng.uniform(min_gap, horizon - min_gap, n))
        gaps = np.diff(np.concatenate(([0.0], times, [horizon])))
        if np.all(gaps > min_gap):
            break
    return JumpPath(horizon, times, amp_scale * rng.standard_normal(n))
