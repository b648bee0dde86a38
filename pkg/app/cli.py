"""
Command-line interface for the PWM commutation toolkit

Subcommands: duty, simulate, report, convert. Exit codes: 0 success,
2 invalid arguments or configuration, 3 unsupported technique/phase count.
"""

import argparse
import asyncio
import logging
import sys
from pathlib import Path
from typing import Any, Dict, List, Optional, Tuple

from pydantic import ValidationError

from app.errors import CommutationError, UnsupportedError
from app.services.artifacts import to_json
from app.services.command_polar import DriveConfig, VoltageCommand
from app.services.commutation_core import Technique
from app.services.position_frames import Frame
from app.services.runner import CommutationRunService, RunManifest, load_config_file

logger = logging.getLogger(__name__)

EXIT_OK = 0
EXIT_INVALID = 2
EXIT_UNSUPPORTED = 3

DEFAULT_M = 0.5

# Artifact printed to stdout for each --format, and artifacts always written with --out
STDOUT_ARTIFACTS = {
    "duty": {"csv": "duty.csv", "json": "duty.json", "svg": "duty.svg"},
    "simulate": {"csv": "simulate_waveform.csv", "json": "simulate_summary.json",
                 "svg": "simulate_waveform.svg"},
    "report": {"json": "report.json", "svg": "report.svg"},
    "convert": {"json": "convert.json"},
}
ALWAYS_WRITTEN = {
    "duty": ["duty.csv"],
    "simulate": ["simulate_summary.json", "simulate_waveform.csv", "simulate_spectrum.csv"],
    "report": ["report.json"],
    "convert": ["convert.json"],
}
DEFAULT_FORMAT = {"duty": "csv", "simulate": "json", "report": "json", "convert": "json"}


def _common_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", type=Path, help="JSON config file; flags override its values")
    common.add_argument("--technique", choices=[t.value for t in Technique], default=Technique.SPWM.value)
    common.add_argument("--m", type=float, help="Modulation index")
    common.add_argument("--delta-rad", type=float, dest="delta_rad", help="Phase advance (rad)")
    common.add_argument("--vd", type=float, help="d-axis voltage command (V)")
    common.add_argument("--vq", type=float, help="q-axis voltage command (V)")
    common.add_argument("--vdc", type=float, help="Estimated DC-link voltage (V)")
    common.add_argument("--phases", type=int, help="Phase count")
    common.add_argument("--ml", type=float, dest="m_l", help="Lower modulation-index threshold")
    common.add_argument("--mh", type=float, dest="m_h", help="Upper modulation-index threshold")
    common.add_argument("--do", type=float, dest="d_o", help="Commutation offset magnitude")
    common.add_argument("--blend-swap", action="store_true", dest="blend_swap", default=None,
                        help="Swap the APWM blend direction")
    common.add_argument("--frame", choices=[f.value for f in Frame], default=Frame.PHASE.value)
    common.add_argument("--polarity", type=int, choices=[1, -1], default=1)
    common.add_argument("--f-ratio", type=int, dest="f_ratio", help="PWM periods per electrical cycle")
    common.add_argument("--samples", type=int, default=360, help="Angle grid points per cycle")
    common.add_argument("--samples-per-period", type=int, dest="samples_per_period",
                        help="Simulation samples per PWM period")
    common.add_argument("--cycles", type=int, default=1, help="Electrical cycles to simulate")
    common.add_argument("--tp-s", type=float, dest="t_p_s", help="Nominal PWM period (s)")
    common.add_argument("--dither-s", type=float, dest="dither_s", help="Period dither amplitude (s)")
    common.add_argument("--seed", type=int, help="Dither seed")
    common.add_argument("--out", type=Path, help="Directory to write artifacts into")
    common.add_argument("--format", choices=["csv", "json", "svg"], dest="fmt")
    common.add_argument("-v", "--verbose", action="store_true", help="Debug logging on stderr")
    return common


def build_parser() -> argparse.ArgumentParser:
    common = _common_parser()
    parser = argparse.ArgumentParser(prog="pwm-commutation",
                                     description="Inverter PWM commutation duties, simulation and reports")
    commands = parser.add_subparsers(dest="command", required=True)
    commands.add_parser("duty", parents=[common], help="Duty cycles over one electrical cycle")
    commands.add_parser("simulate", parents=[common], help="Switched waveform and summary")
    report = commands.add_parser("report", parents=[common], help="Sweep over modulation index")
    report.add_argument("--sweep", type=float, nargs="+", help="Modulation indices to evaluate")
    commands.add_parser("convert", parents=[common], help="Voltage command to polar form")
    return parser


def configure_logging(verbose: bool) -> None:
    logging.basicConfig(
        level=logging.DEBUG if verbose else logging.WARNING,
        stream=sys.stderr,
        format="%(levelname)s %(name)s: %(message)s",
    )


def build_manifest(args: argparse.Namespace) -> RunManifest:
    """Merge the config file with command-line overrides"""
    document: Dict[str, Any] = load_config_file(args.config) if args.config else {}
    drive = {key: document[key] for key in DriveConfig.model_fields if key in document}
    carrier = dict(document.get("carrier", {}))

    for flag, key in (("phases", "n_phases"), ("m_l", "m_l"), ("m_h", "m_h"),
                      ("d_o", "d_o"), ("blend_swap", "blend_swap")):
        value = getattr(args, flag)
        if value is not None:
            drive[key] = value
    for key in ("f_ratio", "samples_per_period", "t_p_s", "dither_s", "seed"):
        value = getattr(args, key)
        if value is not None:
            carrier[key] = value
    if args.vdc is not None:
        carrier["v_dc"] = args.vdc

    manifest: Dict[str, Any] = {
        "config": drive,
        "carrier": carrier,
        "technique": args.technique,
        "outputs": [args.fmt or DEFAULT_FORMAT[args.command]],
        "seed": carrier.get("seed", 0),
        "frame": args.frame,
        "polarity": args.polarity,
        "samples": args.samples,
        "cycles": args.cycles,
        "sweep": getattr(args, "sweep", None),
    }
    voltage_given = args.vd is not None or args.vq is not None
    if voltage_given:
        manifest["voltage"] = {"v_d_star": args.vd, "v_q_star": args.vq, "v_dc_hat": args.vdc}
    if args.m is not None or args.delta_rad is not None or not voltage_given:
        manifest["polar"] = {
            "m": DEFAULT_M if args.m is None else args.m,
            "delta": 0.0 if args.delta_rad is None else args.delta_rad,
        }
    return RunManifest.model_validate(manifest)


def _convert_artifacts(service: CommutationRunService, args: argparse.Namespace) -> Dict[str, str]:
    cmd = VoltageCommand(v_d_star=args.vd, v_q_star=args.vq, v_dc_hat=args.vdc)
    document = service.convert(cmd)
    return {"convert.json": to_json(document)}


def run(args: argparse.Namespace) -> Tuple[Dict[str, str], List[str]]:
    """Produce every artifact of the command and the formats requested for it"""
    service = CommutationRunService()
    if args.command == "convert":
        return _convert_artifacts(service, args), [args.fmt or DEFAULT_FORMAT["convert"]]
    manifest = build_manifest(args)
    if args.command == "duty":
        produced = service.duty_artifacts(manifest)
    elif args.command == "simulate":
        produced = service.simulate_artifacts(manifest)
    else:
        produced = asyncio.run(service.report_artifacts(manifest))
    return produced, manifest.outputs


def emit(command: str, formats: List[str], produced: Dict[str, str], out: Optional[Path]) -> None:
    unavailable = [fmt for fmt in formats if fmt not in STDOUT_ARTIFACTS[command]]
    if unavailable:
        raise ValueError(f"format {unavailable[0]} is not available for {command}")
    selected = [STDOUT_ARTIFACTS[command][fmt] for fmt in formats]
    if out is None:
        for name in selected:
            sys.stdout.write(produced[name])
        return
    out.mkdir(parents=True, exist_ok=True)
    for name in dict.fromkeys(ALWAYS_WRITTEN[command] + selected):
        (out / name).write_bytes(produced[name].encode("utf-8"))
        logger.info("Wrote %s", out / name)


def main(argv: Optional[List[str]] = None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return EXIT_OK if exc.code in (0, None) else EXIT_INVALID
    configure_logging(args.verbose)

    if args.command == "convert" and None in (args.vd, args.vq, args.vdc):
        print("error: convert needs --vd, --vq and --vdc", file=sys.stderr)
        return EXIT_INVALID
    try:
        produced, formats = run(args)
        emit(args.command, formats, produced, args.out)
    except UnsupportedError as exc:
        print(f"error: unsupported: {exc}", file=sys.stderr)
        return EXIT_UNSUPPORTED
    except (CommutationError, ValidationError, ValueError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INVALID
    return EXIT_OK


if __name__ == "__main__":
    sys.exit(main())
