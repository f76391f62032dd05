"""Monte-Carlo regret experiments, CSV round-trip and scaling analysis."""
from __future__ import annotations

import csv
import hashlib
import io
import json
import logging
import math
import os
import warnings
from concurrent.futures import ProcessPoolExecutor
from dataclasses import asdict, dataclass, field
from pathlib import Path
from typing import Iterable

import numpy as np

from .env import InstanceSpec, NoiseModel
from .harness import INSTANCE_STREAM, parse_log_line, run_episode, stream
from .policies import ConfigurationError, EscalationPolicy, make_policy

log = logging.getLogger(__name__)

PAPER_HORIZONS = tuple(range(1000, 101001, 10000))
PAPER_POLICIES = ("alg1", "ucb", "ucb-mono", "ucb-deflate")
CSV_COLUMNS = {
    "alg1": "alg1_reg",
    "ucb": "UCB_reg",
    "ucb-mono": "UCB_inc_reg",
    "ucb-deflate": "UCB_def_reg",
}
CSV_HEADER = "T," + ",".join(CSV_COLUMNS[p] for p in PAPER_POLICIES)


class AnalysisError(ValueError):
    pass


class CsvFormatError(ValueError):
    def __init__(self, message, lineno):
        super().__init__(f"line {lineno}: {message}")
        self.lineno = lineno


@dataclass(frozen=True)
class ExperimentConfig:
    horizons: tuple[int, ...] = PAPER_HORIZONS
    replications: int = 100
    sigma: float = 0.1
    master_seed: int = 1
    policies: tuple[str, ...] = PAPER_POLICIES
    instance: InstanceSpec = field(default_factory=lambda: InstanceSpec("random-peak"))
    policy_sigma: float | None = None
    overrides: tuple = ()  # ((policy, (("K", 4), ("m", 10))), ...)

    def __post_init__(self):
        object.__setattr__(self, "horizons", tuple(int(T) for T in self.horizons))
        object.__setattr__(self, "policies", tuple(self.policies))
        if isinstance(self.overrides, dict):
            object.__setattr__(self, "overrides", tuple(
                (p, tuple(sorted(kw.items()))) for p, kw in sorted(self.overrides.items())))

    def override_for(self, policy: str) -> dict:
        return dict(dict(self.overrides).get(policy, ()))

    def make_policies(self, instance=None):
        return [make_policy(name, instance=instance, **self.override_for(name))
                for name in self.policies]

    def validate(self):
        if not self.horizons:
            raise ConfigurationError("horizons must be nonempty")
        if any(T < 1 for T in self.horizons):
            raise ConfigurationError("every horizon must be >= 1")
        if self.replications < 1:
            raise ConfigurationError("replications must be >= 1")
        if not self.sigma >= 0:
            raise ConfigurationError("sigma must be non-negative")
        if not self.policies:
            raise ConfigurationError("policy roster is empty")
        if len(set(self.policies)) != len(self.policies):
            raise ConfigurationError("duplicate policy in roster")
        probe = None if self.instance.is_random else self.instance.build()
        if "oracle" in self.policies and probe is None:
            # an instance is only needed to locate the maximizer
            probe = self.instance.build(np.random.default_rng(0))
        for policy in self.make_policies(probe):
            if isinstance(policy, EscalationPolicy):
                for T in self.horizons:
                    policy.schedule(T)
        return self

    def fingerprint(self) -> str:
        blob = json.dumps(asdict(self), sort_keys=True, default=str)
        return hashlib.sha256(blob.encode()).hexdigest()[:16]


@dataclass
class RegretTable:
    """Mean regret (and standard error) per horizon and policy."""

    horizons: tuple[int, ...]
    mean: dict[str, tuple[float, ...]]
    se: dict[str, tuple[float, ...]] | None = None
    replications: int | None = field(default=None, compare=False)
    records: list = field(default_factory=list, compare=False, repr=False)

    @property
    def policies(self) -> tuple[str, ...]:
        return tuple(self.mean)

    def value(self, policy: str, T: int) -> float:
        return self.mean[policy][self.horizons.index(T)]

    def stderr(self, policy: str, T: int) -> float:
        if self.se is None:
            raise KeyError("table carries no standard errors")
        return self.se[policy][self.horizons.index(T)]

    def summary(self) -> str:
        names = self.policies
        width = max(12, *(len(n) + 2 for n in names))
        lines = ["T".rjust(8) + "".join(n.rjust(width) for n in names)]
        for i, T in enumerate(self.horizons):
            cells = []
            for n in names:
                cell = f"{self.mean[n][i]:.2f}"
                if self.se is not None:
                    cell += f"±{self.se[n][i]:.2f}"
                cells.append(cell.rjust(width))
            lines.append(str(T).rjust(8) + "".join(cells))
        return "\n".join(lines)


def episode_seed(master_seed: int, T: int, r: int) -> int:
    """Seed of replication ``r`` at horizon ``T``."""
    ss = np.random.SeedSequence([int(master_seed), int(T), int(r)])
    return int(ss.generate_state(1, np.uint64)[0])


def run_replication(config: ExperimentConfig, T: int, r: int) -> list[dict]:
    """Draw one instance and run every roster policy on it; returns log entries."""
    seed = episode_seed(config.master_seed, T, r)
    rng = np.random.default_rng(stream(seed, INSTANCE_STREAM))
    f = config.instance.build(rng)
    c = config.instance.claimed_lipschitz(f)
    noise = NoiseModel(config.sigma)
    out = []
    for policy in config.make_policies(f):
        rec = run_episode(policy, f, noise, T, seed, policy_sigma=config.policy_sigma,
                          instance_id=f.name)
        entry = rec.log_entry()
        entry.update({"replication": r, "family": config.instance.label, "lipschitz": c})
        out.append(entry)
    return out


def _run_task(args):
    config, T, r = args
    return run_replication(config, T, r)


def _aggregate(config, entries_by_T) -> RegretTable:
    mean = {p: [] for p in config.policies}
    se = {p: [] for p in config.policies}
    records = []
    for T in config.horizons:
        entries = entries_by_T[T]
        records.extend(entries)
        for p in config.policies:
            vals = np.array([e["regret"] for e in entries if e["policy"] == p], dtype=np.float64)
            if len(vals) != config.replications:
                raise RuntimeError(f"expected {config.replications} runs of {p} at T={T}, got {len(vals)}")
            mean[p].append(float(vals.mean()))
            se[p].append(float(vals.std(ddof=1) / math.sqrt(len(vals))) if len(vals) > 1 else 0.0)
    return RegretTable(config.horizons, {p: tuple(v) for p, v in mean.items()},
                       {p: tuple(v) for p, v in se.items()},
                       replications=config.replications, records=records)


def _checkpoint_path(checkpoint_dir: Path, config: ExperimentConfig, T: int) -> Path:
    return checkpoint_dir / f"{config.fingerprint()}-T{T}.jsonl"


def _load_checkpoint(path: Path, config: ExperimentConfig):
    if not path.exists():
        return None
    try:
        entries = [parse_log_line(line) for line in path.read_text().splitlines() if line]
    except ValueError:
        log.warning("ignoring unreadable checkpoint %s", path)
        return None
    if len(entries) != config.replications * len(config.policies):
        return None
    return entries


def monte_carlo(config: ExperimentConfig, parallelism: int = 1,
                checkpoint_dir: str | os.PathLike | None = None, progress=None) -> RegretTable:
    """Run every (horizon, replication) cell and aggregate by horizon.

    Each replication draws one instance shared by all roster policies.  Work
    is spread over ``parallelism`` processes; aggregation follows the fixed
    (T, r) order, so the result does not depend on scheduling.  With
    ``checkpoint_dir`` finished horizons are stored as episode logs and
    reused on the next call with the same config.
    """
    config.validate()
    ckpt = Path(checkpoint_dir) if checkpoint_dir is not None else None
    if ckpt is not None:
        ckpt.mkdir(parents=True, exist_ok=True)
    entries_by_T = {}
    pool = ProcessPoolExecutor(max_workers=parallelism) if parallelism > 1 else None
    try:
        for T in config.horizons:
            if ckpt is not None:
                cached = _load_checkpoint(_checkpoint_path(ckpt, config, T), config)
                if cached is not None:
                    log.info("T=%d restored from checkpoint", T)
                    entries_by_T[T] = cached
                    continue
            tasks = [(config, T, r) for r in range(config.replications)]
            if pool is None:
                results = map(_run_task, tasks)
            else:
                chunk = max(1, len(tasks) // (4 * parallelism))
                results = pool.map(_run_task, tasks, chunksize=chunk)
            entries = [e for batch in results for e in batch]
            entries_by_T[T] = entries
            if ckpt is not None:
                path = _checkpoint_path(ckpt, config, T)
                tmp = path.with_suffix(".tmp")
                tmp.write_text("".join(json.dumps(e, sort_keys=True) + "\n" for e in entries))
                tmp.replace(path)
            if progress is not None:
                progress(T)
    finally:
        if pool is not None:
            pool.shutdown()
    return _aggregate(config, entries_by_T)


def fit_scaling_exponent(table: RegretTable, policy: str) -> float:
    """Least-squares slope of log mean regret against log T."""
    pts = [(T, R) for T, R in zip(table.horizons, table.mean[policy])]
    keep = [(T, R) for T, R in pts if R > 0]
    if len(keep) < len(pts):
        warnings.warn(f"{len(pts) - len(keep)} nonpositive regret values of {policy} excluded",
                      RuntimeWarning, stacklevel=2)
    if len(keep) < 3:
        raise AnalysisError(f"need at least 3 horizons with positive regret, have {len(keep)}")
    x = np.log([T for T, _ in keep])
    y = np.log([R for _, R in keep])
    slope, _ = np.polyfit(x, y, 1)
    return float(slope)


def theorem1_ceiling(T: int, c: float, sigma: float) -> float:
    """``(3c + 11/2 + 4 sqrt(3) sigma sqrt(ln T)) * T^(3/4)``."""
    if T < 16:
        raise ConfigurationError(f"regret ceiling holds for T >= 16, got T={T}")
    return (3.0 * c + 5.5 + 4.0 * math.sqrt(3.0) * sigma * math.sqrt(math.log(T))) * T ** 0.75


# -- CSV ----------------------------------------------------------------------

def _column(policy: str) -> str:
    return CSV_COLUMNS.get(policy, f"{policy}_reg")


def _policy_for(column: str) -> str:
    for p, c in CSV_COLUMNS.items():
        if c == column:
            return p
    if not column.endswith("_reg"):
        raise ValueError(f"unrecognised column {column!r}")
    return column[: -len("_reg")]


def se_path_for(path) -> Path:
    path = Path(path)
    return path.with_name(path.stem + ".se" + path.suffix)


def _table_text(horizons, values: dict[str, tuple[float, ...]]) -> str:
    extra = [p for p in values if p not in CSV_COLUMNS]
    cols = list(PAPER_POLICIES) + extra
    buf = io.StringIO()
    buf.write(CSV_HEADER + "".join("," + _column(p) for p in extra) + "\n")
    for i, T in enumerate(horizons):
        cells = [str(int(T))]
        for p in cols:
            cells.append(repr(float(values[p][i])) if p in values else "")
        buf.write(",".join(cells) + "\n")
    return buf.getvalue()


def write_csv(table: RegretTable, path) -> None:
    """Write mean regrets in the ``T,alg1_reg,UCB_reg,UCB_inc_reg,UCB_def_reg`` layout.

    Paper roster columns always appear in that order (empty cells for absent
    policies); other policies follow as ``<name>_reg``.  Standard errors, when
    present, go to a sibling ``<stem>.se.csv`` with the same layout.
    """
    path = Path(path)
    path.write_text(_table_text(table.horizons, table.mean), newline="\n")
    if table.se is not None:
        se_path_for(path).write_text(_table_text(table.horizons, table.se), newline="\n")


def _parse_table(text: str, path) -> tuple[tuple[int, ...], dict[str, tuple[float, ...]]]:
    rows = list(csv.reader(io.StringIO(text)))
    if not rows:
        raise CsvFormatError(f"{path} is empty", 1)
    header = rows[0]
    if not header or header[0] != "T":
        raise CsvFormatError("header must start with 'T'", 1)
    try:
        policies = [_policy_for(c) for c in header[1:]]
    except ValueError as exc:
        raise CsvFormatError(str(exc), 1) from None
    horizons = []
    cols = {p: [] for p in policies}
    for lineno, row in enumerate(rows[1:], start=2):
        if len(row) != len(header):
            raise CsvFormatError(f"expected {len(header)} fields, got {len(row)}", lineno)
        try:
            horizons.append(int(row[0]))
            for p, cell in zip(policies, row[1:]):
                cols[p].append(float(cell) if cell != "" else None)
        except ValueError as exc:
            raise CsvFormatError(str(exc), lineno) from None
    values = {}
    for p, vals in cols.items():
        if all(v is None for v in vals):
            continue
        if any(v is None for v in vals):
            raise CsvFormatError(f"column {_column(p)} is partially empty", 2)
        values[p] = tuple(vals)
    return tuple(horizons), values


def read_csv(path) -> RegretTable:
    """Inverse of :func:`write_csv`; picks up the ``.se.csv`` sibling if present."""
    path = Path(path)
    horizons, mean = _parse_table(path.read_text(), path)
    se = None
    sp = se_path_for(path)
    if sp.exists():
        se_horizons, se = _parse_table(sp.read_text(), sp)
        if se_horizons != horizons or se.keys() != mean.keys():
            raise CsvFormatError(f"{sp} does not match {path}", 1)
    return RegretTable(horizons, mean, se)


def write_log(records: Iterable[dict], path) -> None:
    with open(path, "w") as fh:
        for entry in records:
            fh.write(json.dumps(entry, sort_keys=True) + "\n")


def read_log(path) -> list[dict]:
    out = []
    with open(path) as fh:
        for lineno, line in enumerate(fh, start=1):
            if line.strip():
                try:
                    out.append(parse_log_line(line))
                except ValueError as exc:
                    raise ValueError(f"{path}: line {lineno}: {exc}") from None
    return out
