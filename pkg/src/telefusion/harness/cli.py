"""``telefusion`` command line: gen-dataset, run, report."""

from __future__ import annotations

import argparse
import json
import logging
import sys
import traceback
from pathlib import Path

from .artifacts import audit
from .config import SCALES, USECASES, ConfigError, ExperimentConfig, default_output_dir, fingerprint, fingerprint_without_seed, load_config_file, parse_override
from .usecases import REPORT, REPORT_SCHEMA_VERSION, DatasetMismatch, gen_dataset, run

EXIT_OK, EXIT_USAGE, EXIT_FAIL, EXIT_IO = 0, 1, 2, 3

logger = logging.getLogger("telefusion")


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        print(f"{self.prog}: error: {message}", file=sys.stderr)
        raise SystemExit(EXIT_USAGE)


def _experiment_args(p: argparse.ArgumentParser) -> None:
    p.add_argument("--usecase", choices=USECASES)
    p.add_argument("--scale", choices=SCALES)
    p.add_argument("--seed", type=int, help="master seed (mandatory here or in --config)")
    p.add_argument("--out", type=Path, help="output directory")
    p.add_argument("--config", type=Path, help="JSON config file; flags win")
    p.add_argument("--set", action="append", default=[], metavar="KEY=VALUE", help="parameter override (repeatable)")


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="telefusion", description="Telemetry-fusion experiments on simulated optical links.")
    parser.add_argument("-v", "--verbose", action="store_true")
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)
    _experiment_args(sub.add_parser("gen-dataset", help="simulate and store a dataset"))
    _experiment_args(sub.add_parser("run", help="run a use case (generating its dataset if absent)"))
    rp = sub.add_parser("report", help="summarize a run, optionally against another")
    rp.add_argument("--in", dest="inp", type=Path, required=True)
    rp.add_argument("--compare", type=Path)
    return parser


def experiment_config(args) -> ExperimentConfig:
    """Merge config file and flags (flags win) into an ExperimentConfig."""
    file = load_config_file(args.config) if args.config else {}
    usecase = args.usecase or file.get("usecase")
    scale = args.scale or file.get("scale") or "desk"
    seed = args.seed if args.seed is not None else file.get("seed")
    if usecase is None:
        raise ConfigError("--usecase is required")
    if seed is None:
        raise ConfigError("--seed is required")
    overrides = dict(file.get("overrides", {}))
    overrides.update(parse_override(s) for s in args.set)
    out = args.out or (Path(file["out"]) if "out" in file else default_output_dir(usecase, scale, seed))
    cfg = ExperimentConfig(usecase, scale, seed, Path(out), overrides)
    cfg.params()  # type-check overrides up front
    return cfg


def load_report(run_dir: Path) -> dict:
    """Read and validate a report; raises FileNotFoundError or ValueError."""
    path = Path(run_dir) / REPORT
    rep = json.loads(path.read_text())
    if rep.get("schema_version") != REPORT_SCHEMA_VERSION:
        raise ValueError(f"{path}: unsupported report schema_version {rep.get('schema_version')!r}")
    if fingerprint(rep["config"]) != rep["config_fingerprint"]:
        raise ValueError(f"{path}: config fingerprint does not match the embedded config")
    if fingerprint_without_seed(rep["config"]) != rep["config_fingerprint_without_seed"]:
        raise ValueError(f"{path}: seedless config fingerprint does not match the embedded config")
    missing = [a for a in rep["artifacts"] if not (Path(run_dir) / a).exists()]
    if missing:
        raise FileNotFoundError(f"{path}: referenced artifacts missing: {missing[:5]}")
    return rep


def _fmt(v) -> str:
    if isinstance(v, float):
        return f"{v:.6g}"
    return "null" if v is None else str(v)


def summarize(rep: dict) -> str:
    cfg = rep["config"]
    lines = [
        f"usecase: {rep['usecase']}  scale: {cfg['scale']}  seed: {cfg['master_seed']}",
        f"config fingerprint: {rep['config_fingerprint']}",
        f"runtime: {rep['runtime_seconds']:.1f} s",
        "scalars:",
    ]
    lines += [f"  {k}: {_fmt(v)}" for k, v in sorted(rep["scalars"].items())]
    lines.append("assertions:")
    lines += [f"  {'PASS' if ok else 'FAIL'} {k}" for k, ok in sorted(rep["assertions"].items())]
    return "\n".join(lines)


def compare(a: dict, b: dict) -> str:
    same = a["config_fingerprint_without_seed"] == b["config_fingerprint_without_seed"]
    lines = [
        f"seeds: {a['config']['master_seed']} vs {b['config']['master_seed']}",
        f"config fingerprints without seed: {'identical' if same else 'different'}",
        "scalar: first second delta",
    ]
    for k in sorted(set(a["scalars"]) | set(b["scalars"])):
        x, y = a["scalars"].get(k), b["scalars"].get(k)
        if isinstance(x, (int, float)) and isinstance(y, (int, float)) and not isinstance(x, bool):
            lines.append(f"  {k}: {_fmt(x)} {_fmt(y)} {_fmt(y - x)}")
        else:
            lines.append(f"  {k}: {_fmt(x)} {_fmt(y)} {'same' if x == y else 'differs'}")
    return "\n".join(lines)


def _failing_module(exc: BaseException) -> str:
    tb = traceback.extract_tb(exc.__traceback__)
    for frame in reversed(tb):
        parts = Path(frame.filename).with_suffix("").parts
        if "telefusion" in parts:
            return ".".join(parts[parts.index("telefusion"):])
    return "unknown"


def main(argv: list[str] | None = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(
        level=logging.INFO if args.verbose else logging.WARNING, format="%(levelname)s %(name)s: %(message)s"
    )
    try:
        if args.command == "report":
            rep = load_report(args.inp)
            if args.compare:
                print(compare(rep, load_report(args.compare)))
            else:
                print(summarize(rep))
            return EXIT_OK
        cfg = experiment_config(args)
        if args.command == "gen-dataset":
            root = gen_dataset(cfg)
            print(f"dataset written to {root}")
            return EXIT_OK
        rep = run(cfg)
        problems = audit(cfg.output_dir)
        for p in problems:
            print(f"audit: {p}", file=sys.stderr)
        print(summarize(rep))
        return EXIT_OK if rep["passed"] and not problems else EXIT_FAIL
    except (ConfigError, DatasetMismatch) as exc:
        print(f"telefusion: config error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except (OSError, json.JSONDecodeError) as exc:
        print(f"telefusion: I/O error: {exc}", file=sys.stderr)
        return EXIT_IO
    except ValueError as exc:
        if args.command == "report":
            print(f"telefusion: invalid report: {exc}", file=sys.stderr)
            return EXIT_IO
        print(f"telefusion: error in {_failing_module(exc)}: {exc}", file=sys.stderr)
        return EXIT_FAIL
    except Exception as exc:  # component failure
        print(f"telefusion: error in {_failing_module(exc)}: {type(exc).__name__}: {exc}", file=sys.stderr)
        return EXIT_FAIL
