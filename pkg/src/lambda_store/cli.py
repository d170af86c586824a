"""``lambda-store`` command line: run a scenario and write plot-ready text files."""

from __future__ import annotations

import argparse
import sys
from pathlib import Path

from .config import format_config, parse_config
from .errors import ConfigError, NothingReleasedError, NumericalInvariantError
from .scenario import PRESET_KINDS, SCENARIO_KINDS, SimulationRecord, preset, released_energy_split, run_scenario

EXIT_OK, EXIT_CONFIG, EXIT_NUMERICAL, EXIT_IO = 0, 2, 3, 4


def fmt(x) -> str:
    """Lowercase scientific notation, 12 digits after the point, bare exponent (``1.5e-10``)."""
    mant, exp = f"{float(x) + 0.0:.12e}".split("e")
    return f"{mant}e{int(exp)}"


def _rows(rows):
    return "".join(",".join(fmt(v) for v in row) + "\n" for row in rows)


def emit_outputs(record: SimulationRecord, out_dir) -> list[Path]:
    """Write exit.csv, coherence.csv and peaks.txt into ``out_dir``."""
    out = Path(out_dir)
    z = record.z
    exit_text = "t_prime,eps1_exit,eps3_exit,eps2,eps4\n" + _rows(record.exit_series)
    coh_lines = ["t_prime,z,re_sigma_bc,im_sigma_bc\n"]
    for t, row in zip(record.coherence_t, record.coherence_map):
        coh_lines.append(_rows(zip([t] * len(z), z, row.real, row.imag)))
    peak_lines = [
        f"{name} {fmt(p.t_center)} {fmt(p.height)} {fmt(p.width_fwhm)}\n"
        for name, peaks in (("eps1", record.peaks_eps1), ("eps3", record.peaks_eps3))
        for p in peaks
    ]
    files = {
        "exit.csv": exit_text,
        "coherence.csv": "".join(coh_lines),
        "peaks.txt": "".join(peak_lines),
    }
    written = []
    try:
        out.mkdir(parents=True, exist_ok=True)
        for name, text in files.items():
            path = out / name
            with open(path, "w", encoding="ascii", newline="\n") as fh:
                fh.write(text)
            written.append(path)
    except OSError as exc:
        raise OSError(f"cannot write outputs to {out}: {exc}") from exc
    return written


def _summary(record: SimulationRecord):
    lines = [f"scenario {record.config.scenario_kind}: {record.config.grid.nt} steps"]
    for name, peaks in (("eps1", record.peaks_eps1), ("eps3", record.peaks_eps3)):
        centers = ", ".join(fmt(p.t_center) for p in peaks) or "none"
        lines.append(f"  {name} exit peaks at t' = {centers}")
    try:
        f1, f3 = released_energy_split(record)
        lines.append(f"  released photon split eps1:eps3 = {f1:.4f}:{f3:.4f}")
    except NothingReleasedError:
        lines.append("  nothing released")
    return "\n".join(lines)


def _cmd_run(args) -> int:
    try:
        text = Path(args.config).read_text() if args.config else ""
    except OSError as exc:
        print(f"error: cannot read config {args.config}: {exc}", file=sys.stderr)
        return EXIT_IO
    try:
        config = parse_config(text, args.scenario, args.set or ())
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    try:
        record = run_scenario(config)
    except NumericalInvariantError as exc:
        print(f"numerical invariant violated ({exc.monitor}): {exc}", file=sys.stderr)
        return EXIT_NUMERICAL
    try:
        emit_outputs(record, args.out)
    except OSError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_IO
    print(_summary(record))
    return EXIT_OK


def _cmd_presets(args) -> int:
    for i, kind in enumerate(PRESET_KINDS):
        if i:
            print()
        print(f"## {kind}")
        print(format_config(preset(kind)), end="")
    return EXIT_OK


def build_parser():
    parser = argparse.ArgumentParser(
        prog="lambda-store",
        description="Light storage and frequency conversion in a double-Lambda medium.",
    )
    sub = parser.add_subparsers(dest="command", required=True)
    run = sub.add_parser("run", help="run one scenario and write exit.csv, coherence.csv, peaks.txt")
    run.add_argument("--config", help="config document (section.key = value lines)")
    run.add_argument("--scenario", help=f"one of {', '.join(SCENARIO_KINDS)}")
    run.add_argument("--out", required=True, help="output directory")
    run.add_argument("--set", action="append", metavar="SECTION.KEY=VALUE",
                     help="override one config key; repeatable")
    run.set_defaults(func=_cmd_run)
    pre = sub.add_parser("presets", help="print the default config of each preset scenario")
    pre.set_defaults(func=_cmd_presets)
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    return args.func(args)


if __name__ == "__main__":
    sys.exit(main())
