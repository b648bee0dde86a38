"""
Test configuration and fixtures for the PWM commutation package
"""

import math

import numpy as np
import pytest
from fastapi.testclient import TestClient

from app.main import app
from app.services.command_polar import DriveConfig, PolarCommand
from app.services.inverter_sim import CarrierConfig
from app.services.runner import CommutationRunService, RunManifest

TECHNIQUES_3PH = ["spwm", "thpwm", "dpwm", "dpwm-offset", "cpwm", "apwm"]
TECHNIQUES_ANY_N = ["spwm", "dpwm", "dpwm-offset", "cpwm", "apwm"]


@pytest.fixture
def client():
    """Create a test client for the FastAPI application"""
    return TestClient(app)


@pytest.fixture
def run_service():
    """Create a fresh instance of CommutationRunService for testing"""
    return CommutationRunService()


@pytest.fixture
def drive_config():
    """Default three-phase drive configuration"""
    return DriveConfig()


@pytest.fixture
def five_phase_config():
    return DriveConfig(n_phases=5)


@pytest.fixture
def carrier():
    """Default carrier: f_ratio 21, 400 samples per period"""
    return CarrierConfig()


@pytest.fixture
def fine_carrier():
    """Carrier with fine time resolution for utilization checks"""
    return CarrierConfig(f_ratio=21, samples_per_period=1000)


@pytest.fixture
def theta_grid():
    """3600-point phase-position grid over one electrical cycle"""
    return np.arange(3600) * (2.0 * math.pi / 3600)


@pytest.fixture
def m_grid():
    return [round(0.1 * i, 10) for i in range(11)]


@pytest.fixture
def polar():
    """Factory for polar commands"""
    def make(m, delta=0.0):
        return PolarCommand(m=m, delta=delta)
    return make


@pytest.fixture
def manifest():
    """Factory for run manifests with a polar command"""
    def make(technique="spwm", m=0.5, delta=0.0, **fields):
        return RunManifest(technique=technique, polar={"m": m, "delta": delta}, **fields)
    return make


@pytest.fixture
def sample_voltage_requests():
    """Voltage commands with their expected (m, delta)"""
    return [
        ({"v_d_star": 0.0, "v_q_star": 5.0, "v_dc_hat": 10.0}, 0.5, 0.0),
        ({"v_d_star": 5.0, "v_q_star": 0.0, "v_dc_hat": 10.0}, 0.5, math.pi / 2),
        ({"v_d_star": 3.0, "v_q_star": 4.0, "v_dc_hat": 10.0}, 0.5, 0.6435011087932844),
        ({"v_d_star": 0.0, "v_q_star": 0.0, "v_dc_hat": 10.0}, 0.0, 0.0),
    ]
