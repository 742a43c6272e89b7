"""Shared fixtures and helpers for the test suite."""

import numpy as np
import pytest

from secrecap import ChannelPair

# Hard non-degraded 2x2 instance used throughout: the difference Gram matrix
# W1 - W2 has one positive and one negative eigenvalue, {0.395, -3.293}.
DEMO_H1 = np.array([[0.77, -0.30], [-0.32, -0.64]])
DEMO_H2 = np.array([[0.54, -0.11], [-0.93, -1.71]])


@pytest.fixture
def demo_channel():
    return ChannelPair(DEMO_H1, DEMO_H2)


def random_channel(rng, m, n1, n2):
    return ChannelPair(rng.standard_normal((n1, m)), rng.standard_normal((n2, m)))


def random_spd(rng, m, trace=None):
    """Random symmetric positive definite matrix, optionally trace-normalized."""
    a = rng.standard_normal((m, m))
    s = a @ a.T + 0.1 * np.eye(m)
    if trace is not None:
        s *= trace / np.trace(s)
    return s


def random_feasible_k21(rng, n1, n2, max_norm=0.95):
    """Random cross block with spectral norm strictly below 1."""
    b = rng.standard_normal((n2, n1))
    target = max_norm * rng.uniform(0.1, 1.0)
    return b * (target / np.linalg.norm(b, 2))


def rel_err_inf(approx, exact):
    """Infinity-norm relative error, guarded against a zero reference."""
    approx = np.asarray(approx, dtype=float)
    exact = np.asarray(exact, dtype=float)
    scale = max(np.max(np.abs(exact)), 1e-30)
    return np.max(np.abs(approx - exact)) / scale
