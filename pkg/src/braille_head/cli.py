"""Command-line interface.

Exit codes: 0 success, 1 configuration or usage error, 2 translation error,
3 layout/planning error, 4 verification failure, 5 cam geometry error.
"""

from __future__ import annotations

import argparse
import datetime as _dt
import os
import sys
from pathlib import Path

from . import braille
from .machine import ConfigError, MachineConfig
from .mechanism import (CamGeometryError, max_pressure_angle, profile_csv, profile_points,
                        profile_svg, strike_force_envelope)
from .planner import PlanningError, plan_from_json
from .sim import (EncoderAmbiguity, OffGridDot, SimulationError, dumps_fixed, estimate_time,
                  plan_text, simulate_plan)

EXIT_OK = 0
EXIT_CONFIG = 1
EXIT_TRANSLATE = 2
EXIT_LAYOUT = 3
EXIT_VERIFY = 4
EXIT_MECHANISM = 5
CONFIG_ENV = "EMBOSS_CONFIG"


class _Parser(argparse.ArgumentParser):
    # argparse exits with 2 on usage errors, which would collide with EXIT_TRANSLATE
    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(EXIT_CONFIG, f"{self.prog}: error: {message}\n")


def _write(path: str | None, text: str) -> None:
    if path is None:
        sys.stdout.write(text)
    else:
        Path(path).write_text(text, encoding="utf-8", newline="")


def load_config(path: str | None) -> MachineConfig:
    path = path or os.environ.get(CONFIG_ENV)
    if not path:
        return MachineConfig()
    return MachineConfig.loads(Path(path).read_text(encoding="utf-8"))


def _table(path: str | None) -> braille.TranslationTable:
    return braille.TranslationTable.load(path) if path else braille.DEFAULT


def _text_arg(args) -> str:
    if getattr(args, "file", None):
        return Path(args.file).read_text(encoding="utf-8").rstrip("\n")
    return args.text or ""


def cmd_translate(args) -> int:
    cells = braille.text_to_cells(_text_arg(args), _table(args.table))
    if not cells:
        return EXIT_OK
    _write(args.out, braille.cells_to_unicode(cells) + "\n"
           + " ".join(braille.mask_to_dots(c) or "0" for c in cells) + "\n")
    return EXIT_OK


def cmd_plan(args) -> int:
    config = load_config(args.config)
    plan = plan_text(_text_arg(args), config, _table(args.table))
    _write(args.out, plan.to_json())
    print(f"columns={len(plan.columns)} travel_deg={plan.total_travel:.4f} "
          f"est_time_s={estimate_time(plan, config):.6f}", file=sys.stderr)
    return EXIT_OK


def cmd_simulate(args) -> int:
    config = load_config(args.config)
    table = _table(args.table)
    if args.plan_file:
        plan = plan_from_json(Path(args.plan_file).read_text(encoding="utf-8"), config.assembly)
        text = None
    else:
        text = _text_arg(args)
        plan = plan_text(text, config, table)
    result = simulate_plan(plan, config, text, table)
    report = result.report_dict()
    if args.stamp:
        report["generated_at"] = _dt.datetime.now(_dt.timezone.utc).isoformat(timespec="seconds")
    _write(args.out, dumps_fixed(report))
    if args.svg:
        _write(args.svg, result.paper.to_svg())
    if args.csv:
        _write(args.csv, result.paper.to_csv())
    failed = not result.roundtrip_ok or result.report.spurious_dot_count or result.report.missing_dot_count
    if failed:
        print("verification failed: read-back does not match the job", file=sys.stderr)
        return EXIT_VERIFY
    return EXIT_OK


def cmd_cam(args) -> int:
    config = load_config(args.config)
    profile = config.cam.profile()
    points = profile_points(profile, args.samples)
    phase, angle = max_pressure_angle(profile)
    force = strike_force_envelope(profile, config.servo.shaft_torque)
    if args.csv:
        _write(args.csv, profile_csv(points))
    if args.svg:
        _write(args.svg, profile_svg(points, profile))
    limit = config.cam.pressure_angle_limit_deg
    print(f"max pressure angle: {angle:.2f} deg at lobe phase {phase:.2f} deg "
          f"(limit {limit:.1f} deg, {'ok' if angle < limit else 'EXCEEDED'})")
    required = config.layout.emboss_force_n
    print(f"force envelope: {force:.1f} N (required {required:.1f} N, "
          f"{'ok' if force >= required else 'INSUFFICIENT'})")
    return EXIT_OK


def cmd_dump_config(args) -> int:
    _write(args.out, load_config(args.config).dumps())
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", help=f"machine config JSON (default: ${CONFIG_ENV} or built-in)")
    common.add_argument("--table", help="translation table file (char<TAB>dots per line)")
    common.add_argument("--out", help="write the main output here instead of stdout")
    common.add_argument("--svg", help="SVG output path")
    common.add_argument("--csv", help="CSV output path")
    common.add_argument("--stamp", action="store_true", help="add a generation timestamp to reports")

    parser = _Parser(prog="braille-head", description="Plan and simulate a three-cam Braille embossing head.")
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)

    p = sub.add_parser("translate", parents=[common], help="text to Unicode Braille cells")
    p.add_argument("text", nargs="?", default="")
    p.add_argument("--file", help="read text from a UTF-8 file")
    p.set_defaults(func=cmd_translate)

    p = sub.add_parser("plan", parents=[common], help="emit the servo/axis job plan as JSON")
    p.add_argument("text", nargs="?", default="")
    p.add_argument("--file", help="read text from a UTF-8 file")
    p.set_defaults(func=cmd_plan)

    p = sub.add_parser("simulate", parents=[common], help="run a job on the virtual machine")
    p.add_argument("text", nargs="?", default="")
    p.add_argument("--file", help="read text from a UTF-8 file")
    p.add_argument("--plan-file", help="simulate a saved plan JSON instead of text")
    p.set_defaults(func=cmd_simulate)

    p = sub.add_parser("cam", parents=[common], help="export the cam profile and design checks")
    p.add_argument("--samples", type=int, default=360)
    p.set_defaults(func=cmd_cam)

    p = sub.add_parser("dump-config", parents=[common], help="print the effective configuration")
    p.set_defaults(func=cmd_dump_config)
    return parser


def main(argv: list[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except braille.BrailleError as exc:
        print(f"translation error: {exc}", file=sys.stderr)
        return EXIT_TRANSLATE
    except PlanningError as exc:
        print(f"planning error: {exc}", file=sys.stderr)
        return EXIT_LAYOUT
    except (SimulationError, OffGridDot, EncoderAmbiguity) as exc:
        print(f"verification error: {exc}", file=sys.stderr)
        return EXIT_VERIFY
    except CamGeometryError as exc:
        print(f"cam geometry error: {exc}", file=sys.stderr)
        return EXIT_MECHANISM
    except (ConfigError, OSError, ValueError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_CONFIG


if __name__ == "__main__":
    sys.exit(main())
