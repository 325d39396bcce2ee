"""Command-line surface: split, stamp, verify, estimate, margin.

Exit codes are fixed for scripting: 0 success, 1 verification failure,
2 usage or format error, 3 I/O error, 4 backend failure.

Options may also come from a key=value defaults file via ``--config``;
explicit command-line flags win over config values. The external backend
reads its endpoint from ``--endpoint`` or the TSA_ENDPOINT environment
variable.
"""

from __future__ import annotations

import argparse
import os
import secrets
import sys
import tempfile
from dataclasses import dataclass
from pathlib import Path

from . import estimator, retention
from .errors import (
    BackendRejectedError,
    BackendUnavailableError,
    BadParamError,
    IoSinkError,
    LogstampError,
)
from .kdf import KdfParams, calibrate_repetitions, commit, kdf_chain
from .marker import (
    MARKER_SUFFIX,
    TimestampMarker,
    assemble_markers,
    parse_marker,
    serialize_marker,
    verify_marker,
)
from .merkle import build_tree
from .tsa import ExternalTsaStub, LedgerBackend, TimestampBackend

COMMANDS = ("split", "stamp", "verify", "estimate", "margin")

# Option groups that are alternatives of one another: when the command line
# sets any member, config-file values for the whole group are ignored.
_EXCLUSIVE_GROUPS = {
    "stamp": [{"repetitions", "target_seconds", "max_allowed_seconds"}],
    "margin": [{"rate_hps", "rate_log2"}, {"window_log2", "retention_seconds", "handling_seconds"}],
}

_TRUE_WORDS = {"1", "true", "yes", "on"}


def _fail(message: str) -> int:
    print(f"logstamp: error: {message}", file=sys.stderr)
    return 2


# --- backends ----------------------------------------------------------------


def _select_backend(args: argparse.Namespace) -> TimestampBackend:
    if args.backend == "ledger":
        return LedgerBackend(args.ledger)
    endpoint = args.endpoint or os.environ.get("TSA_ENDPOINT")
    if not endpoint:
        raise BadParamError("external backend needs --endpoint or TSA_ENDPOINT")
    return ExternalTsaStub(endpoint)


# --- stamping pipeline --------------------------------------------------------


@dataclass
class StampResult:
    markers: list[TimestampMarker]
    paths: list[Path]
    tokens_issued: int


def _resolve_repetitions(args: argparse.Namespace) -> int:
    explicit = args.repetitions is not None
    calibrated = args.target_seconds is not None or args.max_allowed_seconds is not None
    if explicit == calibrated:
        raise BadParamError(
            "give exactly one of --repetitions or --target-seconds with --max-allowed-seconds"
        )
    if explicit:
        if args.repetitions < 1:
            raise BadParamError("--repetitions must be >= 1")
        return args.repetitions
    if args.target_seconds is None or args.max_allowed_seconds is None:
        raise BadParamError("calibration needs both --target-seconds and --max-allowed-seconds")
    return calibrate_repetitions(args.target_seconds, args.max_allowed_seconds)


def stamp_paths(
    paths: list[str],
    backend: TimestampBackend,
    out_dir: str,
    repetitions: int,
    *,
    legacy: bool = False,
) -> StampResult:
    """Stamp a batch: one tree, one KDF chain, one token, one marker per file.

    Input paths are sorted lexicographically so leaf indices are reproducible
    across shells. With ``legacy=True`` every file is stamped as its own
    single-leaf batch (one token per file), for comparison runs.

    Markers are written atomically (temp file + rename); on any failure no
    marker from this invocation is left behind.
    """
    ordered = sorted(paths)
    names = [os.path.basename(p) for p in ordered]
    if len(set(names)) != len(names):
        raise BadParamError("input file names must be unique (markers are named after them)")
    contents = []
    for path in ordered:
        with open(path, "rb") as fh:
            contents.append(fh.read())

    if legacy:
        batches = [([name], [content]) for name, content in zip(names, contents)]
    else:
        batches = [(names, contents)]

    markers: list[TimestampMarker] = []
    tokens_issued = 0
    for batch_names, batch_contents in batches:
        tree = build_tree(batch_contents)
        params = KdfParams(
            salt=secrets.token_bytes(16), repetitions=repetitions, n_files=tree.leaf_count
        )
        commitment = commit(kdf_chain(tree.root, params.salt, params.repetitions), params)
        token = backend.request_timestamp(commitment.digest)
        tokens_issued += 1
        markers.extend(assemble_markers(batch_names, tree, params, commitment, token))

    os.makedirs(out_dir, exist_ok=True)
    written: list[Path] = []
    try:
        for marker in markers:
            target = Path(out_dir) / (marker.file_name + MARKER_SUFFIX)
            blob = serialize_marker(marker)
            fd, tmp_name = tempfile.mkstemp(dir=out_dir, prefix=".tsm-")
            try:
                with os.fdopen(fd, "wb") as fh:
                    fh.write(blob)
                    fh.flush()
                    os.fsync(fh.fileno())
                os.replace(tmp_name, target)
            except BaseException:
                if os.path.exists(tmp_name):
                    os.unlink(tmp_name)
                raise
            written.append(target)
    except BaseException:
        for path in written:
            try:
                os.unlink(path)
            except OSError:
                pass
        raise
    return StampResult(markers, written, tokens_issued)


# --- commands ------------------------------------------------------------------


def cmd_split(args: argparse.Namespace) -> int:
    try:
        rules_text = Path(args.rules).read_text(encoding="utf-8")
    except (OSError, UnicodeDecodeError) as exc:
        return _fail(f"cannot read rules file: {exc}")
    ruleset = retention.compile_rules(rules_text)
    os.makedirs(args.out_dir, exist_ok=True)
    with open(args.input, "rb") as stream, retention.DirectorySink(args.out_dir) as sink:
        stats = retention.split_stream(stream, ruleset, sink)
    print(f"total={stats.total}")
    for class_name in sorted(stats.lines_per_class):
        print(f"lines.{class_name}={stats.lines_per_class[class_name]}")
    return 0


def cmd_stamp(args: argparse.Namespace) -> int:
    repetitions = _resolve_repetitions(args)
    backend = _select_backend(args)
    result = stamp_paths(
        args.files, backend, args.out_dir, repetitions, legacy=args.legacy
    )
    print(f"n_files={len(result.markers)}")
    print(f"backend={backend.backend_id}")
    print(f"tokens_issued={result.tokens_issued}")
    if not args.legacy:
        print(f"root={result.markers[0].root.hex()}")
        print(f"commitment={result.markers[0].commitment.digest.hex()}")
    for path in result.paths:
        print(f"marker={path}")
    return 0


def cmd_verify(args: argparse.Namespace) -> int:
    marker = parse_marker(Path(args.marker).read_bytes())
    content = Path(args.file).read_bytes()
    backend = _select_backend(args)
    report = verify_marker(content, marker, backend)
    for name in ("path_ok", "commitment_ok", "token_ok", "overall"):
        print(f"{name}={'true' if getattr(report, name) else 'false'}")
    if report.failure_detail:
        print(f"failure_detail={report.failure_detail}")
    return 0 if report.overall else 1


def cmd_estimate(args: argparse.Namespace) -> int:
    if args.cost and args.price is None:
        return _fail("cost columns requested but --price not given")
    if args.overhead == "auto":
        overhead = None
    else:
        try:
            overhead = int(args.overhead)
        except ValueError:
            return _fail("--overhead must be an integer or 'auto'")
    model = estimator.CostModel(
        files_per_rotation=args.n,
        days=args.days,
        rotations_per_day=args.rotations_per_day,
        hash_size_bytes=args.hash_size,
        token_size_bytes=args.token_size,
        price_per_timestamp=args.price,
    )
    report = estimator.savings_report(model, marker_overhead_bytes=overhead)
    if args.format == "kv":
        print(estimator.render_savings_kv(report))
    else:
        print(estimator.render_savings_table(report))
    return 0


def cmd_margin(args: argparse.Namespace) -> int:
    if args.rate_hps is None and args.rate_log2 is None:
        return _fail("give --rate-hps or --rate-log2")
    if args.rate_hps is not None and args.rate_log2 is not None:
        return _fail("--rate-hps and --rate-log2 are mutually exclusive")
    rate = args.rate_hps if args.rate_hps is not None else 2.0 ** args.rate_log2

    if args.window_log2 is not None:
        if args.retention_seconds is not None or args.handling_seconds is not None:
            return _fail("--window-log2 excludes --retention-seconds/--handling-seconds")
        window = int(round(2.0 ** args.window_log2))
        retention_seconds, handling_seconds = window - 1, 1
    elif args.retention_seconds is not None and args.handling_seconds is not None:
        retention_seconds, handling_seconds = args.retention_seconds, args.handling_seconds
    else:
        return _fail("give --window-log2 or both --retention-seconds and --handling-seconds")

    margin = estimator.security_margin(args.hash_bits, retention_seconds, handling_seconds, rate)
    if args.repetitions > 1:
        margin = estimator.kdf_adjusted_margin(margin, args.repetitions)
    print(estimator.render_margin_kv(margin))
    return 0


# --- parser / config plumbing ---------------------------------------------------


def _add_backend_options(parser: argparse.ArgumentParser) -> None:
    parser.add_argument("--backend", choices=("ledger", "external"), default="ledger")
    parser.add_argument("--ledger", default="tsa-ledger.bin", help="ledger file path")
    parser.add_argument("--endpoint", default=None, help="external TSA endpoint URL")


def build_parser() -> tuple[argparse.ArgumentParser, dict[str, argparse.ArgumentParser]]:
    parser = argparse.ArgumentParser(prog="logstamp")
    parser.add_argument("--config", default=None, help="key=value defaults file")
    sub = parser.add_subparsers(dest="command", required=True)
    subparsers: dict[str, argparse.ArgumentParser] = {}

    p = sub.add_parser("split", help="split a log into per-retention-class files")
    p.add_argument("input", help="log file to split")
    p.add_argument("--rules", required=True, help="retention rules file")
    p.add_argument("--out-dir", default=".", help="directory for <class>.log outputs")
    p.set_defaults(func=cmd_split)
    subparsers["split"] = p

    p = sub.add_parser("stamp", help="timestamp a batch of files under one token")
    p.add_argument("files", nargs="+", help="files to stamp")
    p.add_argument("--out-dir", default=".", help="directory for .tsm markers")
    p.add_argument("--repetitions", type=int, default=None, help="explicit KDF repetitions")
    p.add_argument("--target-seconds", type=float, default=None, help="calibrate KDF to this delay")
    p.add_argument("--max-allowed-seconds", type=float, default=None, help="stamping delay budget")
    p.add_argument("--legacy", action="store_true", help="one token per file (comparison mode)")
    _add_backend_options(p)
    p.set_defaults(func=cmd_stamp)
    subparsers["stamp"] = p

    p = sub.add_parser("verify", help="check a file against its marker")
    p.add_argument("file", help="file to verify")
    p.add_argument("marker", help=".tsm marker path")
    _add_backend_options(p)
    p.set_defaults(func=cmd_verify)
    subparsers["verify"] = p

    p = sub.add_parser("estimate", help="legacy-vs-new storage and cost comparison")
    p.add_argument("--n", type=int, required=True, help="files per rotation")
    p.add_argument("--days", type=int, default=1)
    p.add_argument("--rotations-per-day", type=int, default=1)
    p.add_argument("--token-size", type=int, default=estimator.DEFAULT_TOKEN_SIZE_BYTES)
    p.add_argument("--hash-size", type=int, default=estimator.DEFAULT_HASH_SIZE_BYTES)
    p.add_argument(
        "--overhead",
        default="0",
        help="per-marker surcharge bytes, or 'auto' for the measured .tsm value",
    )
    p.add_argument("--price", type=float, default=None, help="price per timestamp")
    p.add_argument("--cost", action="store_true", help="require cost columns (needs --price)")
    p.add_argument("--format", choices=("table", "kv"), default="table")
    p.set_defaults(func=cmd_estimate)
    subparsers["estimate"] = p

    p = sub.add_parser("margin", help="brute-force attack feasibility report")
    p.add_argument("--hash-bits", type=int, default=256)
    p.add_argument("--retention-seconds", type=int, default=None)
    p.add_argument("--handling-seconds", type=int, default=None)
    p.add_argument("--window-log2", type=float, default=None, help="log2 of the total attack window")
    p.add_argument("--rate-hps", type=float, default=None, help="attacker hashes per second")
    p.add_argument("--rate-log2", type=float, default=None, help="log2 of attacker rate")
    p.add_argument("--repetitions", type=int, default=1, help="KDF repetitions in force")
    p.set_defaults(func=cmd_margin)
    subparsers["margin"] = p

    return parser, subparsers


def _read_config(path: str) -> dict[str, str]:
    values: dict[str, str] = {}
    text = Path(path).read_text(encoding="utf-8")
    for line_number, line in enumerate(text.split("\n"), start=1):
        stripped = line.strip()
        if not stripped or stripped.startswith("#"):
            continue
        key, sep, value = stripped.partition("=")
        if not sep or not key.strip():
            raise BadParamError(f"config line {line_number}: expected key=value")
        values[key.strip().replace("-", "_")] = value.strip()
    return values


def _config_path(argv: list[str]) -> str | None:
    for index, token in enumerate(argv):
        if token == "--config" and index + 1 < len(argv):
            return argv[index + 1]
        if token.startswith("--config="):
            return token.split("=", 1)[1]
    return None


def _inject_config(argv: list[str], subparsers: dict[str, argparse.ArgumentParser]) -> list[str]:
    """Insert config values as options right after the subcommand.

    Later (user-supplied) occurrences win in argparse, so explicit flags
    override the config. Keys unknown to the subcommand are ignored, as are
    keys belonging to an option group the user already picked a member of.
    """
    path = _config_path(argv)
    if path is None:
        return argv
    config = _read_config(path)
    command_index = next((i for i, tok in enumerate(argv) if tok in COMMANDS), None)
    if command_index is None:
        return argv
    command = argv[command_index]
    subparser = subparsers[command]
    actions = subparser._option_string_actions

    user_dests = {
        actions[tok.split("=", 1)[0]].dest
        for tok in argv[command_index + 1 :]
        if tok.split("=", 1)[0] in actions
    }
    skipped = set(user_dests)
    for group in _EXCLUSIVE_GROUPS.get(command, []):
        if user_dests & group:
            skipped |= group

    injected: list[str] = []
    for key, value in config.items():
        option = "--" + key.replace("_", "-")
        action = actions.get(option)
        if action is None or action.dest in skipped:
            continue
        if isinstance(action, argparse._StoreTrueAction):
            if value.lower() in _TRUE_WORDS:
                injected.append(option)
        else:
            injected.extend([option, value])
    return argv[: command_index + 1] + injected + argv[command_index + 1 :]


def main(argv: list[str] | None = None) -> int:
    if argv is None:
        argv = sys.argv[1:]
    parser, subparsers = build_parser()
    try:
        argv = _inject_config(list(argv), subparsers)
    except (OSError, LogstampError) as exc:
        return _fail(f"config: {exc}")
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return exc.code if isinstance(exc.code, int) else 2
    try:
        return args.func(args)
    except (BackendUnavailableError, BackendRejectedError) as exc:
        print(f"logstamp: error[{exc.code}]: {exc}", file=sys.stderr)
        return 4
    except IoSinkError as exc:
        print(f"logstamp: error[{exc.code}]: {exc}", file=sys.stderr)
        return 3
    except LogstampError as exc:
        print(f"logstamp: error[{exc.code}]: {exc}", file=sys.stderr)
        return 2
    except OSError as exc:
        print(f"logstamp: error: {exc}", file=sys.stderr)
        return 3


if __name__ == "__main__":
    sys.exit(main())
