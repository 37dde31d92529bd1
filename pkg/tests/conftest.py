import math

import numpy as np
import pytest

from fsotraj.channel import LinkParams
from fsotraj.jitter import JitterCovariance
from fsotraj.kinematics import AircraftParams, Posture, pointing_vector


@pytest.fixture
def rng():
    return np.random.default_rng(20240811)


@pytest.fixture
def default_link():
    return LinkParams()


@pytest.fixture
def default_aircraft():
    return AircraftParams()


# Geometry used throughout the pointing-error comparisons: UAV at
# [50, 550, 600] m, pitched -10 degrees, jitter stds (1, 0.3, 0.1) mrad.
ANALYSIS_POSITION = np.array([50.0, 550.0, 600.0])
ANALYSIS_SIGMAS_MRAD = (1.0, 0.3, 0.1)


def analysis_geometry(yaw: float = 0.0, rho: float = 0.0):
    """(covariance, pointing vector) for the standard comparison geometry."""
    cov = JitterCovariance.from_mrad(ANALYSIS_SIGMAS_MRAD, (rho, rho, rho))
    posture = Posture(roll=0.0, pitch=math.radians(-10.0), yaw=yaw)
    return cov, pointing_vector(ANALYSIS_POSITION, posture)
