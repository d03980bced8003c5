"""Command-line entry point: ``dnlsq {soliton,propagate,enmap,sweep}``.

Exit codes: 0 success, 2 config error, 3 solver error, 4 numerical blowup,
1 anything else. On failure a JSON error object goes to stderr and, when
the output directory is known, to ``error.json`` there.
"""
from __future__ import annotations

import argparse
import json
import logging
import sys
from pathlib import Path

from . import __version__, io
from .config import MODES, build_config, load_config
from .errors import (
    ConfigError,
    NonFinite,
    NumericalBlowup,
    SolverError,
    UnphysicalCovariance,
)
from .experiments import RUNNERS

EXIT_OK, EXIT_OTHER, EXIT_CONFIG, EXIT_SOLVER, EXIT_BLOWUP = 0, 1, 2, 3, 4


def exit_code_for(exc: BaseException) -> int:
    if isinstance(exc, ConfigError):
        return EXIT_CONFIG
    if isinstance(exc, SolverError):
        return EXIT_SOLVER
    if isinstance(exc, (NumericalBlowup, NonFinite, UnphysicalCovariance)):
        return EXIT_BLOWUP
    return EXIT_OTHER


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(
        prog="dnlsq",
        description="Entanglement of discrete solitons in Kerr waveguide arrays.")
    ap.add_argument("--version", action="version", version=f"dnlsq {__version__}")
    sub = ap.add_subparsers(dest="mode", required=True)
    for mode in MODES:
        p = sub.add_parser(mode, help=f"run the {mode} experiment")
        p.add_argument("--config", help="JSON run config (defaults are used when omitted)")
        p.add_argument("--set", dest="overrides", action="append", default=[],
                       metavar="SECTION.KEY=VALUE",
                       help="override one config key; VALUE is parsed as JSON if possible")
        p.add_argument("--out", help="shortcut for --set output.directory=OUT")
        p.add_argument("-v", "--verbose", action="store_true")
    return ap


def _error_payload(exc: BaseException, code: int) -> dict:
    return {"error": type(exc).__name__, "message": str(exc), "exit_code": code}


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    overrides = list(args.overrides) + [f"experiment.mode={json.dumps(args.mode)}"]
    if args.out:
        overrides.append(f"output.directory={json.dumps(args.out)}")
    cfg = None
    try:
        if args.config:
            cfg = load_config(args.config, overrides)
        else:
            cfg = build_config({}).with_(overrides)
        summary = RUNNERS[cfg.mode](cfg)
    except Exception as exc:
        code = exit_code_for(exc)
        payload = _error_payload(exc, code)
        if code == EXIT_OTHER:
            logging.getLogger("dnlsq").exception("unexpected failure")
        print(json.dumps(payload), file=sys.stderr)
        if cfg is not None:
            try:
                io.write_json(Path(cfg["output"]["directory"]) / "error.json", payload,
                              cfg.hash())
            except OSError:
                pass
        return code
    summary = {"mode": cfg.mode, "config_hash": cfg.hash(), **summary}
    print(json.dumps(io.jsonable(summary), indent=2, sort_keys=True))
    return EXIT_OK


if __name__ == "__main__":
    sys.exit(main())
