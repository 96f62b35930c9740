"""Command-line front end.

Subcommands map one-to-one onto the experiment families plus a raw-program
runner; every command writes CSV tables (authoritative) and SVG figures into
the output directory and exits 0 on success.  Parse and configuration
problems are printed as ``file:line:col: severity: message`` diagnostics and
exit with status 2.
"""

from __future__ import annotations

import argparse
import sys
from pathlib import Path

from .config import (
    SAMPLE_PRESETS,
    ConfigError,
    default_molecule_path,
    load_molecule,
    load_sample,
)
from .experiments import (
    ExperimentConfig,
    run_fid_appendix,
    run_noise_decay,
    run_phase_sweep,
    run_program,
    run_spectrum_theory,
)
from .noise import DecouplingMode
from .pulseprog import ProgramError, parse
from .runner import INITIAL_STATES

EXIT_OK = 0
EXIT_ERROR = 1
EXIT_CONFIG = 2


def _float_list(text: str) -> list[float]:
    return [float(part) for part in text.split(",") if part.strip()]


def _int_list(text: str) -> list[int]:
    return [int(part) for part in text.split(",") if part.strip()]


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="starspin",
        description="Star-topology nuclear-spin sensor simulator",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--out", type=Path, default=Path("starspin-out"), help="output directory")
    common.add_argument(
        "--molecule", type=Path, default=None, help="molecule definition file (default: shipped)"
    )
    common.add_argument("--offset-hz", type=float, default=100.0, help="detection offset of the observed spin")
    common.add_argument("--points", type=int, default=4096, help="acquisition points")
    common.add_argument("--dwell-ms", type=float, default=1.0, help="dwell time per point, ms")
    common.add_argument("--zero-fill", type=int, default=2, help="zero-fill factor for spectra")
    common.add_argument("--max-step-ms", type=float, default=0.5, help="integrator step cap during delays, ms")
    common.add_argument(
        "--cnot-mode",
        choices=("ideal", "quantized"),
        default="ideal",
        help="entangling delay: exact pi/J or quantized to shift beat periods",
    )

    p = sub.add_parser("spectrum-theory", parents=[common], help="closed-form three-peak spectra")
    p.add_argument("--theta", type=_float_list, default=[0.0, 50.0], help="phases in degrees, comma separated")
    p.add_argument("--jt2", type=float, default=22.0, help="dimensionless J*T2 of the model")

    p = sub.add_parser("phase-sweep", parents=[common], help="simulated phase readout vs applied phase")
    p.add_argument("--sample", default="sample1", help=f"preset {SAMPLE_PRESETS} or a sample file")
    p.add_argument("--theta", type=_float_list, default=[0.0, 30.0, 50.0, 90.0])
    p.add_argument("--tau-ms", type=float, default=3.4, help="sensing time, ms")
    p.add_argument(
        "--sequence",
        choices=("cc", "cs", "both"),
        default="both",
        help="field on the center spin, the side spins, or both sweeps",
    )

    p = sub.add_parser("noise-decay", parents=[common], help="signal decay vs sensing time")
    p.add_argument("--sample", default="sample1")
    p.add_argument("--n", type=_int_list, default=[1, 2, 3, 4, 5, 6, 8, 10, 12, 14],
                   help="sensing-unit counts, comma separated")
    p.add_argument("--tau-unit-ms", type=float, default=3.44, help="sensing unit length, ms")
    p.add_argument("--theta-deg", type=float, default=0.0)
    p.add_argument(
        "--variants",
        type=lambda s: tuple(v for v in s.split(",") if v),
        default=("full", "selective", "xy8"),
        help="comma separated subset of full,selective,xy8",
    )
    p.add_argument("--decay-points", type=int, default=512, help="acquisition points per decay run")

    p = sub.add_parser("fid-appendix", parents=[common], help="direct FIDs of the prepared state")
    p.add_argument("--samples", default="sample1,sample2,sample3,sample4",
                   help="comma separated presets or sample files")
    p.add_argument("--modes", default="full,selective")
    p.add_argument("--fid-points", type=int, default=2048)

    p = sub.add_parser("run", parents=[common], help="execute a pulse-program file")
    p.add_argument("program", type=Path, help="pulse program (.dsl)")
    p.add_argument("--sample", default=None, help="noise sample preset or file (default: noiseless)")
    p.add_argument("--decoupling", choices=[m.value for m in DecouplingMode], default="full")
    p.add_argument("--init", choices=INITIAL_STATES, default="thermal")
    return parser


def _config_from_args(args) -> ExperimentConfig:
    molecule = load_molecule(args.molecule) if args.molecule else load_molecule(default_molecule_path())
    return ExperimentConfig(
        molecule=molecule,
        out_dir=args.out,
        detect_offset_hz=args.offset_hz,
        points=args.points,
        dwell_ms=args.dwell_ms,
        zero_fill=args.zero_fill,
        max_step_ms=args.max_step_ms,
        cnot_mode=args.cnot_mode,
    )


def main(argv: list[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    try:
        cfg = _config_from_args(args)
        if args.command == "spectrum-theory":
            out = run_spectrum_theory(cfg, thetas_deg=args.theta, jt2=args.jt2)
        elif args.command == "phase-sweep":
            sequences = {
                "cc": ("field_on_cc",),
                "cs": ("field_on_cs",),
                "both": ("field_on_cc", "field_on_cs"),
            }[args.sequence]
            out = run_phase_sweep(
                cfg,
                load_sample(args.sample),
                thetas_deg=args.theta,
                tau_ms=args.tau_ms,
                sequences=sequences,
            )
        elif args.command == "noise-decay":
            out = run_noise_decay(
                cfg,
                load_sample(args.sample),
                n_values=tuple(args.n),
                tau_unit_ms=args.tau_unit_ms,
                theta_deg=args.theta_deg,
                variants=args.variants,
                points=args.decay_points,
            )
        elif args.command == "fid-appendix":
            samples = [load_sample(name) for name in args.samples.split(",") if name]
            modes = tuple(m for m in args.modes.split(",") if m)
            out = run_fid_appendix(cfg, samples, modes=modes, points=args.fid_points)
        elif args.command == "run":
            try:
                text = args.program.read_text(encoding="utf-8")
            except OSError as exc:
                print(f"error: cannot read {args.program}: {exc}", file=sys.stderr)
                return EXIT_CONFIG
            result = parse(text)
            if not result.ok:
                for diag in result.diagnostics:
                    print(diag.format(str(args.program)), file=sys.stderr)
                return EXIT_CONFIG
            sample = load_sample(args.sample) if args.sample else None
            out = run_program(
                cfg,
                result.program,
                sample=sample,
                decoupling=args.decoupling,
                init=args.init,
            )
        else:  # pragma: no cover - argparse enforces the choices
            raise AssertionError(args.command)
    except ConfigError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except ProgramError as exc:
        print(str(exc), file=sys.stderr)
        return EXIT_CONFIG
    except (ValueError, KeyError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_ERROR
    for key in ("csv", "fid", "figure"):
        if key in out:
            print(out[key])
    return EXIT_OK


def entry() -> None:  # console-script hook
    raise SystemExit(main())
