"""
Commutation Router - HTTP endpoints mirroring the command-line interface

Each endpoint takes a RunManifest (or a voltage command) and returns the same
JSON document the CLI writes.
"""

import asyncio
from typing import Any, Dict

from fastapi import APIRouter, HTTPException

from app.errors import CommutationError, ConfigError, UnsupportedError
from app.services.command_polar import DriveConfig, VoltageCommand
from app.services.commutation_core import Technique
from app.services.inverter_sim import CarrierConfig
from app.services.runner import CommutationRunService, RunManifest

# Create router instance
router = APIRouter()

# Initialize the run service
run_service = CommutationRunService()


def _http_error(exc: CommutationError) -> HTTPException:
    """Map library errors onto HTTP status codes"""
    if isinstance(exc, UnsupportedError):
        return HTTPException(status_code=422, detail=f"Unsupported combination: {exc}")
    if isinstance(exc, ConfigError):
        return HTTPException(status_code=400, detail=f"Invalid configuration: {exc}")
    return HTTPException(status_code=400, detail=str(exc))


@router.get("/")
async def commutation_info():
    """Get information about the commutation service"""
    return {
        "service": "PWM Commutation",
        "version": "1.0.0",
        "techniques": [technique.value for technique in Technique],
        "frames": ["phase", "line"],
        "drive_defaults": DriveConfig().model_dump(),
        "carrier_defaults": CarrierConfig().model_dump(),
    }


@router.post("/convert")
async def convert_command(cmd: VoltageCommand) -> Dict[str, Any]:
    """
    Convert a synchronous-frame voltage command to modulation index and phase advance

    Raises:
        HTTPException: 400 if the DC-link voltage is not positive
    """
    try:
        return run_service.convert(cmd)
    except CommutationError as exc:
        raise _http_error(exc)


@router.post("/duty")
async def duty_table(manifest: RunManifest) -> Dict[str, Any]:
    """
    Duty cycles of every phase over one electrical cycle

    Args:
        manifest: Technique, command, configuration and angle grid

    Returns:
        Document with theta_rad, duties (one row per angle) and warnings
    """
    try:
        result = await asyncio.to_thread(run_service.duty, manifest)
    except CommutationError as exc:
        raise _http_error(exc)
    return result["document"]


@router.post("/simulate")
async def simulate_inverter(manifest: RunManifest) -> Dict[str, Any]:
    """Carrier-comparison simulation summary (averages, transitions, utilization, spectrum)"""
    try:
        result = await asyncio.to_thread(run_service.simulate, manifest)
    except CommutationError as exc:
        raise _http_error(exc)
    return result["document"]


@router.post("/report")
async def sweep_report(manifest: RunManifest) -> Dict[str, Any]:
    """Sweep over modulation index: ramps, utilization and dominant switching groups"""
    try:
        return await run_service.report(manifest)
    except CommutationError as exc:
        raise _http_error(exc)
