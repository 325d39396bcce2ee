"""Storage/cost comparison of per-file vs single-root timestamping, plus
brute-force feasibility arithmetic.

The comparison counts only timestamp tokens and timestamp markers, never the
log files themselves. Legacy mode buys one token per file; the aggregated
mode buys one token per rotation and pays ceil(log2(n)) proof digests plus a
fixed surcharge per marker. Reported byte totals are also given floored to
the nearest KiB multiple below, for readability.

Feasibility treats the best known shortcut against the schema as a hash
collision search: about 2**(bits/2) tries, to be spent within the window an
unfaithful operator has (retention plus access-request handling). All the
exponent arithmetic is double-precision log2; the feasibility threshold is
exact at gap 0.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, replace

from .errors import BadParamError
from .marker import MARKER_FIXED_OVERHEAD_BYTES
from .merkle import ceil_log2

KIB = 1024

DEFAULT_TOKEN_SIZE_BYTES = 5 * KIB
DEFAULT_HASH_SIZE_BYTES = 32
DEFAULT_MARKER_OVERHEAD_BYTES = MARKER_FIXED_OVERHEAD_BYTES


@dataclass(frozen=True)
class CostModel:
    files_per_rotation: int
    days: int
    rotations_per_day: int = 1
    hash_size_bytes: int = DEFAULT_HASH_SIZE_BYTES
    token_size_bytes: int = DEFAULT_TOKEN_SIZE_BYTES
    price_per_timestamp: float | None = None

    def __post_init__(self) -> None:
        for name in ("files_per_rotation", "days", "rotations_per_day", "hash_size_bytes", "token_size_bytes"):
            if getattr(self, name) < 1:
                raise BadParamError(f"{name} must be >= 1")
        if self.price_per_timestamp is not None and self.price_per_timestamp < 0:
            raise BadParamError("price_per_timestamp must be >= 0")


@dataclass(frozen=True)
class SavingsReport:
    model: CostModel
    marker_overhead_bytes: int
    tokens_legacy: int
    tokens_new: int
    legacy_storage_bytes: int
    new_storage_bytes: int
    legacy_storage_bytes_floored: int
    new_storage_bytes_floored: int
    legacy_cost: float | None
    new_cost: float | None
    storage_ratio: float
    cost_ratio: float | None


@dataclass(frozen=True)
class AttackFeasibility:
    hash_bits: int
    retention_seconds: int
    handling_seconds: int
    attacker_rate_hps: float
    kdf_repetitions: int
    required_rate_log2: float
    available_rate_log2: float
    gap_log2: float
    feasible: bool

    @property
    def window_seconds(self) -> int:
        return self.retention_seconds + self.handling_seconds

    @property
    def collision_tries_log2(self) -> float:
        return self.hash_bits / 2


def floor_to_kib(size_bytes: int) -> int:
    """Largest multiple of 1024 that does not exceed ``size_bytes``."""
    if size_bytes < 0:
        raise BadParamError("size must be >= 0")
    return (size_bytes // KIB) * KIB


def per_file_marker_bytes(n_files: int, hash_size_bytes: int, marker_overhead_bytes: int) -> int:
    """Marker footprint for one file, excluding the shared token."""
    return ceil_log2(n_files) * hash_size_bytes + marker_overhead_bytes


def savings_report(model: CostModel, *, marker_overhead_bytes: int | None = None) -> SavingsReport:
    """Legacy-vs-aggregated token counts, storage and cost.

    ``marker_overhead_bytes`` defaults to the measured fixed ``.tsm``
    surcharge; pass 0 to count bare proof digests only.
    """
    if marker_overhead_bytes is None:
        marker_overhead_bytes = DEFAULT_MARKER_OVERHEAD_BYTES
    if marker_overhead_bytes < 0:
        raise BadParamError("marker_overhead_bytes must be >= 0")
    n = model.files_per_rotation
    batches = model.rotations_per_day * model.days
    tokens_legacy = n * batches
    tokens_new = batches
    legacy_storage = tokens_legacy * model.token_size_bytes
    new_storage = tokens_new * model.token_size_bytes + n * batches * per_file_marker_bytes(
        n, model.hash_size_bytes, marker_overhead_bytes
    )
    price = model.price_per_timestamp
    return SavingsReport(
        model=model,
        marker_overhead_bytes=marker_overhead_bytes,
        tokens_legacy=tokens_legacy,
        tokens_new=tokens_new,
        legacy_storage_bytes=legacy_storage,
        new_storage_bytes=new_storage,
        legacy_storage_bytes_floored=floor_to_kib(legacy_storage),
        new_storage_bytes_floored=floor_to_kib(new_storage),
        legacy_cost=None if price is None else tokens_legacy * price,
        new_cost=None if price is None else tokens_new * price,
        storage_ratio=legacy_storage / new_storage,
        cost_ratio=None if price is None else tokens_legacy / tokens_new,
    )


def security_margin(
    hash_bits: int,
    retention_seconds: int,
    handling_seconds: int,
    attacker_rate_hps: float,
) -> AttackFeasibility:
    """Can an attacker collide the hash within the cheating window?

    required_rate_log2 is the log2 tries-per-second needed to spend
    2**(bits/2) tries inside retention+handling; available_rate_log2 is the
    attacker's hardware. feasible iff the gap closes (gap <= 0).
    """
    if hash_bits < 1 or retention_seconds < 1 or handling_seconds < 1:
        raise BadParamError("hash_bits, retention_seconds and handling_seconds must be >= 1")
    if not attacker_rate_hps > 0:
        raise BadParamError("attacker_rate_hps must be > 0")
    window = retention_seconds + handling_seconds
    required = hash_bits / 2 - math.log2(window)
    available = math.log2(attacker_rate_hps)
    gap = required - available
    return AttackFeasibility(
        hash_bits=hash_bits,
        retention_seconds=retention_seconds,
        handling_seconds=handling_seconds,
        attacker_rate_hps=attacker_rate_hps,
        kdf_repetitions=1,
        required_rate_log2=required,
        available_rate_log2=available,
        gap_log2=gap,
        feasible=gap <= 0,
    )


def kdf_adjusted_margin(base: AttackFeasibility, repetitions: int) -> AttackFeasibility:
    """Account for every candidate now costing ``repetitions`` hash runs."""
    if repetitions < 1:
        raise BadParamError("repetitions must be >= 1")
    available = base.available_rate_log2 - math.log2(repetitions)
    gap = base.required_rate_log2 - available
    return replace(
        base,
        kdf_repetitions=base.kdf_repetitions * repetitions,
        available_rate_log2=available,
        gap_log2=gap,
        feasible=gap <= 0,
    )


# --- rendering ---------------------------------------------------------------


def _fmt_cost(value: float | None) -> str:
    return "-" if value is None else f"{value:.2f}"


def render_savings_table(report: SavingsReport) -> str:
    rows = [
        ("", "legacy", "new"),
        ("tokens", str(report.tokens_legacy), str(report.tokens_new)),
        ("storage_bytes", str(report.legacy_storage_bytes), str(report.new_storage_bytes)),
        (
            "storage_kib_floor",
            str(report.legacy_storage_bytes_floored // KIB),
            str(report.new_storage_bytes_floored // KIB),
        ),
        ("cost", _fmt_cost(report.legacy_cost), _fmt_cost(report.new_cost)),
    ]
    widths = [max(len(row[col]) for row in rows) for col in range(3)]
    lines = ["  ".join(cell.rjust(widths[col]) for col, cell in enumerate(row)) for row in rows]
    lines.append(
        f"storage_ratio={report.storage_ratio:.2f}"
        + ("" if report.cost_ratio is None else f" cost_ratio={report.cost_ratio:.2f}")
    )
    lines.append(f"marker_overhead_bytes={report.marker_overhead_bytes}")
    if report.tokens_new == report.tokens_legacy:
        lines.append("note: one file per rotation, no savings over per-file timestamps")
    return "\n".join(lines)


def render_savings_kv(report: SavingsReport) -> str:
    model = report.model
    pairs = [
        ("files_per_rotation", model.files_per_rotation),
        ("rotations_per_day", model.rotations_per_day),
        ("days", model.days),
        ("hash_size_bytes", model.hash_size_bytes),
        ("token_size_bytes", model.token_size_bytes),
        ("marker_overhead_bytes", report.marker_overhead_bytes),
        ("tokens_legacy", report.tokens_legacy),
        ("tokens_new", report.tokens_new),
        ("legacy_storage_bytes", report.legacy_storage_bytes),
        ("new_storage_bytes", report.new_storage_bytes),
        ("legacy_storage_bytes_floored", report.legacy_storage_bytes_floored),
        ("new_storage_bytes_floored", report.new_storage_bytes_floored),
        ("storage_ratio", f"{report.storage_ratio:.6g}"),
    ]
    if report.legacy_cost is not None:
        pairs += [
            ("legacy_cost", f"{report.legacy_cost:.6g}"),
            ("new_cost", f"{report.new_cost:.6g}"),
            ("cost_ratio", f"{report.cost_ratio:.6g}"),
        ]
    return "\n".join(f"{key}={value}" for key, value in pairs)


def render_margin_kv(margin: AttackFeasibility) -> str:
    pairs = [
        ("hash_bits", margin.hash_bits),
        ("retention_seconds", margin.retention_seconds),
        ("handling_seconds", margin.handling_seconds),
        ("window_seconds", margin.window_seconds),
        ("window_log2", f"{math.log2(margin.window_seconds):.3f}"),
        ("collision_tries_log2", f"{margin.collision_tries_log2:.3f}"),
        ("required_rate_log2", f"{margin.required_rate_log2:.3f}"),
        ("attacker_rate_hps", f"{margin.attacker_rate_hps:.6g}"),
        ("kdf_repetitions", margin.kdf_repetitions),
        ("available_rate_log2", f"{margin.available_rate_log2:.3f}"),
        ("gap_log2", f"{margin.gap_log2:.3f}"),
        ("feasible", "true" if margin.feasible else "false"),
        ("verdict", "FEASIBLE" if margin.feasible else "INFEASIBLE"),
    ]
    return "\n".join(f"{key}={value}" for key, value in pairs)
