import numpy as np
import pytest

from minsurf_lab.frames import compute_frames, second_fundamental_form
from minsurf_lab.immersion import builtin_surface
from minsurf_lab.complex_structure import catalog_normal_structure


@pytest.fixture(scope="session")
def surface_cache():
    """Frames and A are pure functions of (name, params, resolution); cache
    them so the suite does not recompute the same grids dozens of times."""
    cache = {}

    def get(name, n, params=None):
        key = (name, n, tuple(sorted((params or {}).items())))
        if key not in cache:
            p = builtin_surface(name, params).with_resolution(n)
            fr = compute_frames(p)
            A = second_fundamental_form(p, fr)
            JN = catalog_normal_structure(p, fr)
            cache[key] = (p, fr, A, JN)
        return cache[key]

    return get


def _rnd_dirs(dim, count, seed=0):
    rng = np.random.default_rng(seed)
    d = rng.normal(size=(count, dim))
    return d / np.linalg.norm(d, axis=1, keepdims=True)


@pytest.fixture
def rnd_dirs():
    return _rnd_dirs
