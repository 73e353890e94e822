import os

import numpy as np
import pytest

import dualprecon as dp

DATA_DIR = os.path.join(os.path.dirname(__file__), "data")


@pytest.fixture(scope="session")
def fig1_instance():
    """Benchmark p-norm instance (p=4, d=100, n=1000), stored on disk."""
    return dp.read_instance(os.path.join(DATA_DIR, "fig1_d100.json"))


@pytest.fixture(scope="session")
def fig1_problem(fig1_instance):
    return dp.build_problem(fig1_instance)


@pytest.fixture(scope="session")
def small_pnorm_instance():
    return dp.generate_random_instance("pnorm", d=20, n=200, p=4.0, seed=3)


@pytest.fixture(scope="session")
def box2d_instance():
    """2-d unit box exponential penalty, tau=1, c=(1,0)."""
    return dp.generate_random_instance("exp_penalty", d=2, tau=1.0, seed=0)


def rel_err(approx, exact):
    approx = np.asarray(approx, dtype=float)
    exact = np.asarray(exact, dtype=float)
    denom = max(np.max(np.abs(exact)), 1e-300)
    return np.max(np.abs(approx - exact)) / denom
