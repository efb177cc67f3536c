"""Command line front end: ``baut run``, ``baut fixtures``, ``baut --version``.

Exit codes for ``run``: 0 when the computation completes (whatever the
verdict), 1 on invalid input or configuration, 2 on timeout.
``fixtures`` exits 0 when every check passes, 1 when a fixture file is
missing or corrupt and 3 when a check fails.
"""

from __future__ import annotations

import argparse
import json
import logging
import os
import sys
import warnings
from dataclasses import dataclass
from pathlib import Path

from . import __version__
from .automorphisms import ObstructionReport, ObstructionResult, obstruction_report
from .errors import DegenerateFormError, IndefiniteFormError, SearchTimeout
from .fixtures import FixtureError, validate_fixtures
from .quadform import THEOREM_MAX_GENUS, QuadFormClass, standard_family, symmetrize

EXIT_OK, EXIT_INPUT, EXIT_TIMEOUT, EXIT_FIXTURE_FAIL = 0, 1, 2, 3
LONG_RUN_GENUS = 6

log = logging.getLogger("baut")


class InputError(ValueError):
    pass


@dataclass
class RunConfig:
    genus: int | None = None
    sign: str = "plus"
    matrix_path: Path | None = None
    threads: int = 1
    max_seconds: float | None = None
    emit_json: Path | None = None
    dump_groups: bool = False
    compute_orbits: bool = False
    confirm_long: bool = False

    def validate(self):
        if (self.genus is None) == (self.matrix_path is None):
            raise InputError("exactly one of --genus and --matrix is required")
        if self.threads < 1:
            raise InputError("--threads must be at least 1")
        if self.max_seconds is not None and self.max_seconds <= 0:
            raise InputError("--max-seconds must be positive")
        if self.genus is not None and self.genus < 1:
            raise InputError(f"genus must be >= 1, got {self.genus}")


def read_matrix(path: Path) -> list[list[int]]:
    try:
        raw = json.loads(Path(path).read_text())
    except FileNotFoundError:
        raise InputError(f"malformed matrix file: {path} does not exist")
    except json.JSONDecodeError as exc:
        raise InputError(f"malformed matrix file: {path} is not valid JSON ({exc})")
    if (
        not isinstance(raw, list)
        or not raw
        or not all(isinstance(r, list) and r for r in raw)
        or not all(isinstance(x, int) and not isinstance(x, bool) for r in raw for x in r)
    ):
        raise InputError("malformed matrix file: expected a JSON array of rows of integers")
    if any(len(r) != len(raw) for r in raw):
        shape = f"{len(raw)} rows of lengths {sorted({len(r) for r in raw})}"
        raise InputError(f"non-square matrix: {shape}")
    return raw


def build_form(cfg: RunConfig) -> tuple[QuadFormClass, int | str]:
    if cfg.genus is not None:
        with warnings.catch_warnings():
            warnings.simplefilter("ignore")
            return standard_family(cfg.genus, cfg.sign), cfg.genus
    f = QuadFormClass.from_matrix(read_matrix(cfg.matrix_path))
    if cfg.sign == "minus":
        f = f.negated()
    sym = symmetrize(f)
    if sym.det == 0:
        raise InputError("degenerate form: the symmetrization Q + Q^T has determinant 0")
    if not sym.definite:
        raise InputError("indefinite form: the symmetrization must be positive or negative definite")
    return f, "custom"


def format_summary(r: ObstructionReport) -> str:
    orders = " + ".join(f"Z/{d}" for d in r.orders) or "0"
    rows = [
        ("form", f"h={r.h}, sign {r.sign}"),
        ("boundary group", orders),
        ("|Aut(V)|", r.aut_v_count),
        ("|Im d|", r.image_count),
        ("|Aut(dV)|", r.bdry_aut_count),
        ("surjective", str(r.surjective).lower()),
        ("index", r.index),
    ]
    if r.orbit_count is not None:
        rows.append(("|bAut|", r.orbit_count))
    rows.append(("elapsed", f"{r.elapsed_seconds:.3f} s on {r.threads} thread(s)"))
    width = max(len(k) for k, _ in rows)
    lines = [f"  {k.ljust(width)}  {v}" for k, v in rows]
    lines.append(f"bAut trivial: {str(r.baut_trivial).lower()}")
    return "\n".join(lines)


def _matrices(arr) -> list:
    return [[[int(x) for x in row] for row in m] for m in arr]


def dump_groups(result: ObstructionResult, path: Path):
    payload = {
        "orders": list(result.presentation.orders),
        "isometries": _matrices(result.isometries.elements),
        "image": _matrices(result.image),
        "boundary_automorphisms": _matrices(result.automorphisms),
    }
    path.write_text(json.dumps(payload))


def run(cfg: RunConfig, out=None, err=None) -> int:
    out = out or sys.stdout
    err = err or sys.stderr
    try:
        cfg.validate()
        if cfg.genus is not None and cfg.genus >= LONG_RUN_GENUS:
            print(
                f"warning: genus {cfg.genus} is expensive (minutes to hours, gigabytes of memory)",
                file=err,
            )
            if not cfg.confirm_long and cfg.max_seconds is None:
                raise InputError("refusing to start: pass --confirm-long or set --max-seconds")
        f, label = build_form(cfg)
    except (InputError, ValueError) as exc:
        print(f"error: {exc}", file=err)
        return EXIT_INPUT

    if isinstance(label, int) and label > THEOREM_MAX_GENUS:
        print(f"note: h={label} is outside theorem hypothesis (1 <= h <= {THEOREM_MAX_GENUS})", file=err)
    if f.sign == "minus":
        print("note: sign minus reduced to plus (the boundary automorphism set is unchanged)", file=err)

    try:
        result = obstruction_report(
            f,
            threads=cfg.threads,
            max_seconds=cfg.max_seconds,
            compute_orbits=cfg.compute_orbits,
            label=label,
        )
    except SearchTimeout as exc:
        print(f"timeout: {exc} (budget {cfg.max_seconds} s); no verdict", file=err)
        return EXIT_TIMEOUT
    except (DegenerateFormError, IndefiniteFormError) as exc:
        print(f"error: {exc}", file=err)
        return EXIT_INPUT

    report = result.report
    print(format_summary(report), file=out)
    if cfg.emit_json is not None:
        cfg.emit_json.write_text(json.dumps(report.to_dict(), indent=2) + "\n")
    if cfg.dump_groups:
        if cfg.emit_json is not None:
            side = cfg.emit_json.with_suffix(".groups.json")
        else:
            side = Path(f"baut_groups_{report.h}.json")
        dump_groups(result, side)
        print(f"groups written to {side}", file=err)
    return EXIT_OK


def run_fixtures(data_dir: Path | None, out=None, err=None) -> int:
    out = out or sys.stdout
    err = err or sys.stderr
    try:
        results = validate_fixtures(data_dir)
    except FixtureError as exc:
        print(f"error: {exc}", file=err)
        return EXIT_INPUT
    for res in results:
        status = "pass" if res.passed else "FAIL"
        print(f"h={res.h}: {status}", file=out)
        for name, ok in res.checks.items():
            print(f"  {'ok  ' if ok else 'FAIL'} {name}: {res.details.get(name, '')}", file=out)
    return EXIT_OK if all(r.passed for r in results) else EXIT_FIXTURE_FAIL


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="baut", description="Decide triviality of boundary automorphism sets.")
    p.add_argument("--version", action="version", version=f"baut {__version__}")
    p.add_argument("-v", "--verbose", action="store_true")
    sub = p.add_subparsers(dest="command", required=True)

    r = sub.add_parser("run", help="compute the obstruction report for one form")
    src = r.add_mutually_exclusive_group(required=True)
    src.add_argument("--genus", type=int, help="use the genus-H family form")
    src.add_argument("--matrix", type=Path, help="JSON file holding a square integer matrix Q")
    r.add_argument("--sign", choices=("plus", "minus"), default="plus")
    r.add_argument("--threads", type=int, default=os.cpu_count() or 1)
    r.add_argument("--max-seconds", type=float)
    r.add_argument("--emit-json", type=Path)
    r.add_argument("--dump-groups", action="store_true")
    r.add_argument("--orbits", action="store_true", help="also count double cosets (|bAut|)")
    r.add_argument("--confirm-long", action="store_true")

    fx = sub.add_parser("fixtures", help="check computed boundary forms against the published data")
    fx.add_argument("--data-dir", type=Path)
    return p


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.DEBUG if args.verbose else logging.WARNING)
    if args.command == "fixtures":
        return run_fixtures(args.data_dir)
    cfg = RunConfig(
        genus=args.genus,
        sign=args.sign,
        matrix_path=args.matrix,
        threads=args.threads,
        max_seconds=args.max_seconds,
        emit_json=args.emit_json,
        dump_groups=args.dump_groups,
        compute_orbits=args.orbits,
        confirm_long=args.confirm_long,
    )
    return run(cfg)


if __name__ == "__main__":
    sys.exit(main())
