"""
Pytest configuration and shared fixtures
"""

import sys
from pathlib import Path

import numpy as np
import pytest
from dotenv import load_dotenv

sys.path.insert(0, str(Path(__file__).parent.parent))

from tools.scene import NoiseSpec, SceneConfig, sigma_x2_for_snr, two_level_prior
from tools.sensing import MatrixKind

load_dotenv()


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


@pytest.fixture
def small_scene_config():
    """N=64, gamma=0.5, sparse two-level prior, 20 dB"""
    N, M, sigma2 = 64, 32, 0.01
    return SceneConfig(
        N=N,
        M=M,
        sigma_x2=sigma_x2_for_snr(20.0, M / N, sigma2),
        noise=NoiseSpec(sigma2),
        prior=two_level_prior(N, 0.01, 0.8),
        matrix_kind=MatrixKind.PARTIAL_FOURIER,
        master_seed=7,
    )


@pytest.fixture
def sqlite_url(tmp_path):
    return f"sqlite:///{tmp_path / 'results.db'}"
