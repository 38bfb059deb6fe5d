"""Worst-case campaigns over a suite of logical scenarios.

For each logical scenario the configured optimizer minimizes the quality
function once per seed; the overall worst case is the minimum over seeds.
Outputs written under the output directory:

``quality_table.csv``
    ``logical_id, status, quality, violated, evaluations, seed_of_best,
    termination, variables, values`` (``variables``/``values`` are
    ``;``-separated, in variable order).
``records.json``
    All worst-case records; input for ``compare`` and ``gate``.
``logs/<logical_id>.jsonl``
    One line per evaluation: ``eval_index, seed, values, quality,
    components, violated``.
``traces/<logical_id>.csv`` and ``.svg``
    Re-simulated worst-case trace with its per-sample margin.

Comparison reports use ``logical_id, quality_a, quality_b, delta, verdict``.
Nothing time-dependent is written, so identical inputs give identical files.
"""

from __future__ import annotations

import csv
import io
import json
import logging
from concurrent.futures import ProcessPoolExecutor
from contextlib import contextmanager
from dataclasses import dataclass
from pathlib import Path
from typing import Any, Iterator, Mapping, Optional, Sequence

import numpy as np

from . import plots
from .config import CampaignConfig, SutSpec
from .envelope import trace_margin
from .fitness import Evaluator, ObjectiveSpec
from .optimize import ALGORITHMS, OptimizationResult
from .optimize.base import BatchMap, serial_map
from .scenario import LogicalScenario, ScenarioError, instantiate, load, search_space, validate_logical
from .simulation import run_closed_loop
from .sut import make_sut

log = logging.getLogger(__name__)

TABLE_COLUMNS = (
    "logical_id", "status", "quality", "violated", "evaluations",
    "seed_of_best", "termination", "variables", "values",
)
COMPARISON_COLUMNS = ("logical_id", "quality_a", "quality_b", "delta", "verdict")


class CampaignError(ValueError):
    pass


@dataclass(frozen=True)
class SeedResult:
    seed: int
    values: tuple[float, ...]
    quality: float
    violated: bool
    evaluations: int
    termination: str


@dataclass(frozen=True)
class WorstCaseRecord:
    logical_id: str
    status: str = "ok"  # "ok" | "error"
    error: Optional[str] = None
    variables: tuple[str, ...] = ()
    per_seed: tuple[SeedResult, ...] = ()
    values: Optional[tuple[float, ...]] = None
    quality: Optional[float] = None
    violated: bool = False
    evaluations: int = 0
    seed_of_best: Optional[int] = None
    termination: Optional[str] = None

    def to_dict(self) -> dict[str, Any]:
        return {
            "logical_id": self.logical_id,
            "status": self.status,
            "error": self.error,
            "variables": list(self.variables),
            "values": list(self.values) if self.values is not None else None,
            "quality": self.quality,
            "violated": self.violated,
            "evaluations": self.evaluations,
            "seed_of_best": self.seed_of_best,
            "termination": self.termination,
            "per_seed": [
                {
                    "seed": s.seed,
                    "values": list(s.values),
                    "quality": s.quality,
                    "violated": s.violated,
                    "evaluations": s.evaluations,
                    "termination": s.termination,
                }
                for s in self.per_seed
            ],
        }

    @classmethod
    def from_dict(cls, d: Mapping[str, Any]) -> "WorstCaseRecord":
        return cls(
            logical_id=str(d["logical_id"]),
            status=d.get("status", "ok"),
            error=d.get("error"),
            variables=tuple(d.get("variables", ())),
            per_seed=tuple(
                SeedResult(
                    int(s["seed"]), tuple(s["values"]), float(s["quality"]), bool(s["violated"]),
                    int(s["evaluations"]), str(s["termination"]),
                )
                for s in d.get("per_seed", ())
            ),
            values=tuple(d["values"]) if d.get("values") is not None else None,
            quality=float(d["quality"]) if d.get("quality") is not None else None,
            violated=bool(d.get("violated", False)),
            evaluations=int(d.get("evaluations", 0)),
            seed_of_best=d.get("seed_of_best"),
            termination=d.get("termination"),
        )


def aggregate(logical_id: str, variables: Sequence[str], per_seed: Sequence[SeedResult]) -> WorstCaseRecord:
    """Overall worst case = minimum over the per-seed bests (first seed wins ties)."""
    best = min(per_seed, key=lambda r: r.quality)
    return WorstCaseRecord(
        logical_id=logical_id,
        variables=tuple(variables),
        per_seed=tuple(per_seed),
        values=best.values,
        quality=best.quality,
        violated=best.violated,
        evaluations=sum(r.evaluations for r in per_seed),
        seed_of_best=best.seed,
        termination=best.termination,
    )


@contextmanager
def evaluation_pool(jobs: int) -> Iterator[BatchMap]:
    """Batch map over ``jobs`` worker processes; results come back in input order."""
    if jobs <= 1:
        yield serial_map
        return
    with ProcessPoolExecutor(max_workers=jobs) as pool:

        def batch_map(f, points):
            chunk = max(1, len(points) // (2 * jobs))
            return list(pool.map(f, points, chunksize=chunk))

        yield batch_map


def _best_of(result: OptimizationResult, objective: ObjectiveSpec) -> tuple[int, float]:
    """History index and quality of the worst case found in one run."""
    values = result.history_values
    if values.ndim == 2:
        values = values[:, 0]  # multi mode: worst-case margin is the first objective
    k = int(np.argmin(values))
    return k, float(values[k])


def _log_lines(result: OptimizationResult) -> list[str]:
    lines = []
    for i, (x, raw) in enumerate(zip(result.history_x, result.history_raw)):
        q = raw.to_dict() if hasattr(raw, "to_dict") else {"value": raw, "components": {}, "violated": False}
        entry = {
            "eval_index": i,
            "seed": result.seed,
            "values": [float(v) for v in x],
            "quality": q["value"],
            "components": q["components"],
            "violated": q["violated"],
        }
        lines.append(json.dumps(entry, allow_nan=False))
    return lines


def optimize_scenario(
    logical: LogicalScenario,
    config: CampaignConfig,
    objective: ObjectiveSpec,
    sut: SutSpec,
    batch_map: BatchMap = serial_map,
) -> tuple[WorstCaseRecord, list[str]]:
    space = search_space(logical)
    evaluator = Evaluator(logical, sut.name, dict(sut.params), config.sim, config.envelope, objective)
    algorithm = ALGORITHMS[config.optimizer]
    kwargs: dict[str, Any] = {"batch_map": batch_map}
    if config.optimizer == "nsga2":
        if objective.mode != "multi":
            raise CampaignError("nsga2 requires objective mode 'multi'")
        kwargs["objectives"] = 2
    elif objective.mode == "multi":
        raise CampaignError(f"objective mode 'multi' requires nsga2, not {config.optimizer!r}")

    per_seed, lines = [], []
    for seed in config.seeds:
        result = algorithm(evaluator, space, config.budget, seed, dict(config.optimizer_params), **kwargs)
        k, quality = _best_of(result, objective)
        per_seed.append(
            SeedResult(
                seed=seed,
                values=tuple(float(v) for v in result.history_x[k]),
                quality=quality,
                violated=bool(getattr(result.history_raw[k], "violated", False)),
                evaluations=result.evaluations,
                termination=result.termination,
            )
        )
        lines.extend(_log_lines(result))
        log.info("%s seed %d: quality %.6g after %d evaluations (%s)",
                 logical.id, seed, quality, result.evaluations, result.termination)
    return aggregate(logical.id, logical.names, per_seed), lines


def _export_trace(logical: LogicalScenario, record: WorstCaseRecord, config: CampaignConfig,
                  sut: SutSpec, out: Path) -> None:
    trace = run_closed_loop(
        instantiate(logical, record.values), logical, make_sut(sut.name, sut.params), config.sim
    )
    margins = trace_margin(trace, config.envelope).margins
    (out / f"{logical.id}.csv").write_text(trace.to_csv({"margin": margins}), encoding="utf-8")
    series = {"margin": margins}
    L = config.sim.vehicle_length
    for agent_id, s in trace.agents.items():
        ds = s.s - trace.ego.s
        series[f"{agent_id} gap [m]"] = np.where(ds > 0, ds - L, ds + L)
    (out / f"{logical.id}.svg").write_text(
        plots.line_svg(trace.times, series, title=f"{logical.id}: worst case"), encoding="utf-8"
    )


def quality_table(records: Sequence[WorstCaseRecord]) -> str:
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(TABLE_COLUMNS)
    for r in records:
        writer.writerow([
            r.logical_id,
            r.status if r.status == "ok" else f"error: {r.error}",
            "" if r.quality is None else repr(r.quality),
            str(r.violated).lower(),
            r.evaluations,
            "" if r.seed_of_best is None else r.seed_of_best,
            r.termination or "",
            ";".join(r.variables),
            "" if r.values is None else ";".join(repr(float(v)) for v in r.values),
        ])
    return buf.getvalue()


def save_records(records: Sequence[WorstCaseRecord], path: Path) -> None:
    path.write_text(json.dumps([r.to_dict() for r in records], indent=2) + "\n", encoding="utf-8")


def load_records(path: str | Path) -> list[WorstCaseRecord]:
    try:
        data = json.loads(Path(path).read_text(encoding="utf-8"))
        return [WorstCaseRecord.from_dict(d) for d in data]
    except (OSError, json.JSONDecodeError, KeyError, TypeError, ValueError) as exc:
        raise CampaignError(f"cannot read records from {path}: {exc}") from exc


def run_campaign(config: CampaignConfig, jobs: int = 1, output_dir: Optional[Path] = None) -> list[WorstCaseRecord]:
    """Run every logical scenario of the suite and write all artifacts.

    A scenario that fails to load, validate or simulate yields an error
    record; the remaining scenarios still run.
    """
    out = Path(output_dir or config.output_dir or "worstcase-out")
    (out / "logs").mkdir(parents=True, exist_ok=True)
    (out / "traces").mkdir(parents=True, exist_ok=True)

    records = []
    with evaluation_pool(jobs) as batch_map:
        for entry in config.suite:
            objective = entry.objective or config.objective
            sut = entry.sut or config.sut
            try:
                logical = load(entry.path)
            except (OSError, ScenarioError) as exc:
                records.append(WorstCaseRecord(logical_id=entry.path.stem, status="error",
                                               error=f"{entry.path}: {exc}"))
                continue
            try:
                report = validate_logical(logical)
                if not report.ok:
                    raise ScenarioError(str(report))
                make_sut(sut.name, sut.params)
                record, lines = optimize_scenario(logical, config, objective, sut, batch_map)
            except (ScenarioError, CampaignError, ValueError) as exc:
                log.error("scenario %s failed: %s", logical.id, exc)
                records.append(WorstCaseRecord(logical_id=logical.id, status="error",
                                               error=f"{logical.id}: {exc}", variables=tuple(logical.names)))
                continue
            (out / "logs" / f"{logical.id}.jsonl").write_text("\n".join(lines) + "\n", encoding="utf-8")
            _export_trace(logical, record, config, sut, out / "traces")
            records.append(record)

    (out / "quality_table.csv").write_text(quality_table(records), encoding="utf-8")
    save_records(records, out / "records.json")
    return records


# --- comparison and release --------------------------------------------------


@dataclass(frozen=True)
class ComparisonRow:
    logical_id: str
    quality_a: Optional[float]
    quality_b: Optional[float]
    delta: Optional[float]  # quality_b - quality_a
    verdict: str  # "improved" | "regressed" | "unchanged" | "error"


@dataclass(frozen=True)
class ComparisonReport:
    rows: tuple[ComparisonRow, ...]
    epsilon: float

    @property
    def regression(self) -> bool:
        return any(r.verdict in ("regressed", "error") for r in self.rows)

    def to_csv(self) -> str:
        buf = io.StringIO()
        writer = csv.writer(buf, lineterminator="\n")
        writer.writerow(COMPARISON_COLUMNS)
        for r in self.rows:
            writer.writerow([
                r.logical_id, *("" if x is None else repr(x) for x in (r.quality_a, r.quality_b, r.delta)),
                r.verdict,
            ])
        return buf.getvalue()


def compare_systems(
    records_a: Sequence[WorstCaseRecord], records_b: Sequence[WorstCaseRecord], epsilon: float = 1e-3
) -> ComparisonReport:
    """Row-wise ``delta = q_B - q_A``; lower quality is worse, so delta < -eps regresses."""
    ids_a = [r.logical_id for r in records_a]
    ids_b = [r.logical_id for r in records_b]
    if sorted(ids_a) != sorted(ids_b) or len(set(ids_a)) != len(ids_a):
        raise CampaignError(f"mismatched suites: {sorted(set(ids_a) ^ set(ids_b))}")
    by_id = {r.logical_id: r for r in records_b}
    rows = []
    for a in records_a:
        b = by_id[a.logical_id]
        if a.quality is None or b.quality is None:
            rows.append(ComparisonRow(a.logical_id, a.quality, b.quality, None, "error"))
            continue
        delta = b.quality - a.quality
        if abs(delta) <= epsilon:
            verdict = "unchanged"
        elif delta > 0:
            verdict = "improved"
        else:
            verdict = "regressed"
        rows.append(ComparisonRow(a.logical_id, a.quality, b.quality, delta, verdict))
    return ComparisonReport(tuple(rows), epsilon)


@dataclass(frozen=True)
class GateRow:
    logical_id: str
    quality: Optional[float]
    threshold: float
    violated: bool
    passed: bool
    reason: str


@dataclass(frozen=True)
class GateVerdict:
    rows: tuple[GateRow, ...]

    @property
    def passed(self) -> bool:
        return all(r.passed for r in self.rows)

    @property
    def failed(self) -> list[str]:
        return [r.logical_id for r in self.rows if not r.passed]

    def to_dict(self) -> dict[str, Any]:
        return {
            "passed": self.passed,
            "failed": self.failed,
            "scenarios": [r.__dict__ for r in self.rows],
        }


def release_gate(records: Sequence[WorstCaseRecord], thresholds: Mapping[str, float]) -> GateVerdict:
    """Pass iff every worst case meets its threshold and none left the envelope."""
    missing = [r.logical_id for r in records if r.logical_id not in thresholds]
    if missing:
        raise CampaignError(f"no threshold for {missing}")
    rows = []
    for r in records:
        thr = float(thresholds[r.logical_id])
        if r.quality is None:
            rows.append(GateRow(r.logical_id, None, thr, r.violated, False, f"no result: {r.error}"))
        elif r.violated:
            rows.append(GateRow(r.logical_id, r.quality, thr, True, False, "envelope violated"))
        elif r.quality < thr:
            rows.append(GateRow(r.logical_id, r.quality, thr, False, False, "insufficient reserve"))
        else:
            rows.append(GateRow(r.logical_id, r.quality, thr, False, True, "ok"))
    return GateVerdict(tuple(rows))
