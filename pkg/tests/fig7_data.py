"""Shared, cached grid for the multi-zero DDP checks (alpha=0.8, T=0.3/Delta)."""

from functools import lru_cache

import numpy as np

from nlsweep import ddp, schrodinger
from nlsweep.sweep_catalog import make_profile

GRID = np.geomspace(0.05, 20.0, 30)


def profile(v0):
    return make_profile("tanh_modulated", v0=v0, alpha=0.8, T=0.3, Delta=1.0)


@lru_cache(maxsize=None)
def integrator():
    return np.array([schrodinger.transition_probability(profile(v)).probability for v in GRID])


@lru_cache(maxsize=None)
def generalized(n):
    return np.array([ddp.generalized_probability(profile(v), n).probability for v in GRID])
