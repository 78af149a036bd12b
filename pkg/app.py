import argparse
import logging
import sys
import uuid
from pathlib import Path

from database import create_tables
from services.construct_service import ConfigurationError, ConstructService
from services.export_service import FORMATS, ExportService
from services.harness_service import SUITES, HarnessService, RunConfig, load_registry
from services.report_service import ReportService
from services.similarity_service import SimilarityService
from services.spine_service import SpineService
from services.tree_service import TreeStructureError, TruncationError, format_address, parse_address

logger = logging.getLogger("tree_siblings")

# ============================================================================
# INITIALIZATION
# ============================================================================

def initialize_app(log_level: str = "INFO"):
    """Configure logging and create the history tables"""
    logging.basicConfig(
        level=getattr(logging, log_level.upper(), logging.INFO),
        format="%(asctime)s %(levelname)s %(name)s: %(message)s",
    )
    create_tables()


def config_from_args(args) -> RunConfig:
    """Build and validate the run configuration from parsed arguments"""
    cfg = RunConfig(
        sib_count=args.s,
        stage=args.stage,
        radius=args.radius,
        maxlabel=args.maxlabel,
        registry_path=args.registry,
        suites=tuple(args.suite or ()),
        seed=args.seed,
        out_dir=args.out_dir,
    )
    return cfg.validate()


# ============================================================================
# BUILD
# ============================================================================

def cmd_build(cfg: RunConfig, args) -> int:
    registry = load_registry(cfg)
    tb = ConstructService.build_t(args.family, cfg.stage, cfg.radius, registry)
    print(f"T_{args.family}({cfg.stage}) radius={cfg.radius} config={cfg.config_hash}")
    print(f"  vertices      {len(tb.tree)}")
    print(f"  core vertices {len(tb.core)}")
    print(f"  typed         {len(tb.typing)}")
    print(f"  targets       {len(tb.targets)}")
    for address, height, spin, tag in tb.amalgam_log:
        print(f"  amalgam       {address} height={height} spin={spin:+d} -> {tag}")
    return 0


# ============================================================================
# VERIFY
# ============================================================================

def cmd_verify(cfg: RunConfig, args) -> int:
    reports = HarnessService.run_suites(cfg)
    ok, message = HarnessService.write_reports(cfg, reports)
    if not ok:
        logger.error(message)
    run_id = uuid.uuid4().hex[:12]
    for report in reports:
        saved, message = ReportService.save_report(run_id, report.body(), report.wall_time)
        if not saved:
            logger.warning(message)
    print(HarnessService.summary(reports))
    failed = [r.suite for r in reports if not r.passed]
    if failed:
        print(f"FAILED: {', '.join(failed)}")
        return 1
    print(f"all {len(reports)} suites passed (config {cfg.config_hash})")
    return 0


# ============================================================================
# EXPORT
# ============================================================================

def cmd_export(cfg: RunConfig, args) -> int:
    if args.out:
        ok, message = ExportService.export(cfg, args.object, args.format, args.out)
        print(message)
        return 0 if ok else 1
    print(ExportService.render(cfg, args.object, args.format), end="")
    return 0


# ============================================================================
# REGISTRY
# ============================================================================

def cmd_registry(cfg: RunConfig, args) -> int:
    fresh = ConstructService.build_registry(cfg.sib_count, max(cfg.stage, 1), cfg.radius)
    for key in sorted(fresh):
        spec = fresh[key]
        print(f"{spec.tag}: centre={format_address(spec.centre)} "
              f"overrides={[[format_address(a), b] for a, b in spec.overrides]}")

    if args.action == "save":
        ok, message = ConstructService.save_registry(fresh, cfg.registry_path)
        print(message)
        if ok:
            body = Path(cfg.registry_path).read_text()
            ReportService.save_registry_snapshot(cfg.registry_path, body, len(fresh))
        return 0 if ok else 1

    if args.action == "diff":
        if not Path(cfg.registry_path).exists():
            print(f"no frozen registry at {cfg.registry_path}")
            return 1
        lines = ConstructService.diff_registry(ConstructService.load_registry(cfg.registry_path), fresh)
        for line in lines:
            print(line)
        print("registry matches" if not lines else f"{len(lines)} entries differ")
        return 0 if not lines else 1
    return 0


# ============================================================================
# FINGERPRINT
# ============================================================================

def cmd_fingerprint(cfg: RunConfig, args) -> int:
    sb = SpineService.build_spine(cfg.stage, cfg.radius, cfg.maxlabel)
    u = sb.tree.index(parse_address(args.u))
    v = sb.tree.index(parse_address(args.v))
    fp = SimilarityService.fingerprint(sb, u, v)
    print(fp.to_ascii())
    if args.compare:
        x = sb.tree.index(parse_address(args.compare))
        y = SimilarityService.walk(sb, x, fp)
        print(f"walk from {args.compare} ends at {format_address(sb.tree.records[y].address)}")
    return 0


# ============================================================================
# HISTORY
# ============================================================================

def cmd_history(cfg: RunConfig, args) -> int:
    df = ReportService.filter_reports(args.filter_suite, args.config_hash)
    if df.empty:
        print("No reports stored")
        return 0
    print(ReportService.get_run_summary().to_string(index=False))
    if args.out:
        Path(args.out).write_bytes(ReportService.export_to_excel(df))
        print(f"{len(df)} reports written to {args.out}")
    return 0


# ============================================================================
# MAIN APPLICATION
# ============================================================================

COMMANDS = {
    "build": cmd_build,
    "verify": cmd_verify,
    "export": cmd_export,
    "registry": cmd_registry,
    "fingerprint": cmd_fingerprint,
    "history": cmd_history,
}


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--s", type=int, default=3, help="number of sibling families")
    common.add_argument("--stage", type=int, default=1, help="construction stage k")
    common.add_argument("--radius", type=int, default=6, help="truncation radius")
    common.add_argument("--maxlabel", type=int, default=None, help="largest copy label generated")
    common.add_argument("--registry", default="registry.json", help="frozen sibling registry")
    common.add_argument("--suite", action="append", help="suite to run (repeatable)")
    common.add_argument("--seed", type=int, default=0)
    common.add_argument("--out-dir", default="reports", help="directory for JSON-lines reports")
    common.add_argument("--log-level", default="INFO")

    parser = argparse.ArgumentParser(prog="tree-siblings", description="Tree sibling construction and checks")
    sub = parser.add_subparsers(dest="command", required=True)

    build = sub.add_parser("build", parents=[common], help="summarise a truncation of T_s(k)")
    build.add_argument("--family", type=int, default=0, help="family index s of T_s")

    sub.add_parser("verify", parents=[common], help=f"run suites ({', '.join(sorted(SUITES))})")

    export = sub.add_parser("export", parents=[common], help="export a built object")
    export.add_argument("--object", required=True, help="R, T_s(k), S_i,j, S^p(k), D_s, D'_s, PK(n,m), ...")
    export.add_argument("--format", choices=FORMATS, default="dot")
    export.add_argument("--out", default=None)

    registry = sub.add_parser("registry", parents=[common], help="enumerate, save or diff the sibling registry")
    registry.add_argument("action", choices=("show", "save", "diff"), nargs="?", default="show")

    fingerprint = sub.add_parser("fingerprint", parents=[common], help="fingerprint of a path in the spine")
    fingerprint.add_argument("u")
    fingerprint.add_argument("v")
    fingerprint.add_argument("--compare", default=None, help="walk the fingerprint from this address")

    history = sub.add_parser("history", parents=[common], help="stored suite reports")
    history.add_argument("--filter-suite", default=None)
    history.add_argument("--config-hash", default=None)
    history.add_argument("--out", default=None, help="write the table to an .xlsx file")
    return parser


def main(argv=None) -> int:
    """Main application entry point"""
    args = build_parser().parse_args(argv)
    initialize_app(args.log_level)
    try:
        cfg = config_from_args(args)
        return COMMANDS[args.command](cfg, args)
    except ConfigurationError as e:
        logger.error("configuration error: %s", e)
        return 2
    except (TreeStructureError, TruncationError, ValueError) as e:
        logger.error("%s", e)
        return 2


if __name__ == "__main__":
    sys.exit(main())
