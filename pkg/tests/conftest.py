"""Shared fixtures; the flagship ensembles are expensive and session-scoped."""

import numpy as np
import pytest

from fbmsilt import FbmKernel, HurstParams, representation_residual

FLAGSHIP_EPS = 0.05
FLAGSHIP_N_PATHS = 500
FLAGSHIP_N_LIST = (512, 1024, 2048)
FLAGSHIP_SEED = 2024


def _run_flagship(params):
    kernel = FbmKernel(params)
    rows = []
    rep = None
    for n_steps in FLAGSHIP_N_LIST:
        rep = representation_residual(
            params, FLAGSHIP_EPS, n_steps, FLAGSHIP_N_PATHS,
            seed=FLAGSHIP_SEED, m_nodes=128, kernel=kernel)
        rows.append({"n_steps": n_steps, "ratio": rep["ratio"],
                     "l2_residual": rep["l2_residual"],
                     "l2_lhs": rep["l2_lhs"]})
    return {"rows": rows, "finest": rep}


@pytest.fixture(scope="session")
def flagship_h05_d2():
    return _run_flagship(HurstParams(H=0.5, d=2))


@pytest.fixture(scope="session")
def flagship_h04_d3():
    return _run_flagship(HurstParams(H=0.4, d=3))
