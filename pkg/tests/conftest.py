import numpy as np
import pytest

from ilvrlab.denoise import AnalyticGmmDenoiser
from ilvrlab.schedule import make_linear_schedule
from ilvrlab import toys


@pytest.fixture(scope="session")
def desk_schedule():
    """T=200 schedule with T-rescaled betas, posterior sigmas."""
    return make_linear_schedule(200)


@pytest.fixture(scope="session")
def planar_mix():
    return toys.planar_mixture()


@pytest.fixture(scope="session")
def image_mix():
    return toys.image_mixture()


@pytest.fixture(scope="session")
def planar_denoiser(planar_mix):
    return AnalyticGmmDenoiser(planar_mix)


@pytest.fixture(scope="session")
def image_denoiser(image_mix):
    return AnalyticGmmDenoiser(image_mix)


@pytest.fixture()
def rng():
    return np.random.default_rng(1234)
