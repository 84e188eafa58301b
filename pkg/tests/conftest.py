import sys
from pathlib import Path

import numpy as np
import pytest

from volregime import EgarchMParams, MgndComponent, MgndParams, SkewGndParams

sys.path.insert(0, str(Path(__file__).resolve().parents[1] / "scripts"))


@pytest.fixture(scope="session")
def benchmark_mixture() -> MgndParams:
    """Published two-component fit for the European benchmark index."""
    return MgndParams(
        components=(
            MgndComponent(pi=0.8502, mu=0.1141, delta=0.7351, nu=1.3123),
            MgndComponent(pi=0.1498, mu=-0.4408, delta=2.0158, nu=1.7998),
        )
    )


@pytest.fixture(scope="session")
def dax_egarch() -> EgarchMParams:
    """Published German traditional-index coefficient set (AR term zero)."""
    return EgarchMParams(
        mu=-0.0887, m1=-2.6587, phi1=0.0, lam=0.2083,
        omega=-0.0320, v1=0.4841, alpha1=-0.1123, gamma1=0.1121, beta1=0.9389,
        innovation=SkewGndParams(nu=1.4890, s=1.0295),
    )


@pytest.fixture(scope="session")
def mibesg_egarch() -> EgarchMParams:
    """Published Italian ESG-index coefficient set (AR term zero)."""
    return EgarchMParams(
        mu=-0.1461, m1=-2.7715, phi1=0.0, lam=0.2704,
        omega=-0.0238, v1=0.7009, alpha1=-0.1221, gamma1=0.1024, beta1=0.8856,
        innovation=SkewGndParams(nu=1.8833, s=0.9965),
    )


@pytest.fixture()
def bernoulli_dummy():
    def make(n: int, share: float = 0.15, seed: int = 2024) -> np.ndarray:
        rng = np.random.default_rng(seed)
        return (rng.random(n) < share).astype(int)

    return make
