import json
import logging
from dataclasses import dataclass, field
from pathlib import Path
from typing import List

import pandas as pd

from gradlab._types import GradientLevel, InterferenceSnapshot, LossVector, Ranking, Trajectory, method_label
from gradlab.monitors import ranking_similarity, trajectory_score
from gradlab.utils import EmptyTrajectory, InsufficientCells
from sweep_engine import _write_atomic, read_manifest

# --- LOGGING SETUP ---
logger = logging.getLogger("Report")

# Report row -> snapshot field
INDICATORS = {"GDS": "gds", "GMS": "gms", "FD": "fd"}


@dataclass
class CellResult:
    """One completed sweep cell as read back from disk."""

    name: str
    method: str
    level: GradientLevel
    trajectories: List[Trajectory] = field(default_factory=list)
    final: pd.Series = None

    @property
    def label(self) -> str:
        return method_label(self.method, self.level)


@dataclass
class ReportTable:
    """Converted ranking similarities (indicators x performance metrics) plus
    the per-method tables they were computed from."""

    matrix: pd.DataFrame
    scores: pd.DataFrame
    performance: pd.DataFrame
    gap: pd.DataFrame

    def to_text(self) -> str:
        fmt = lambda x: f"{x:.4f}"
        parts = [
            "Ranking similarity (converted to [0.5, 1.0])",
            self.matrix.to_string(float_format=fmt),
            "",
            "Indicator scores (tail mean of smoothed curves, averaged over seeds)",
            self.scores.to_string(float_format=fmt),
            "",
            "Final losses (averaged over seeds)",
            self.performance.to_string(float_format=lambda x: f"{x:.6g}"),
            "",
            "Surrogate gap (rep - param) / param of final total loss",
        ]
        parts.append(self.gap.to_string(index=False, float_format=fmt) if not self.gap.empty else "(no method ran at both levels)")
        return "\n".join(parts) + "\n"


def load_trajectory(path, method: str, level) -> Trajectory:
    """Rebuilds a Trajectory, final losses included, from a seed_<s>.jsonl file."""
    path = Path(path)
    seed = int(path.stem.split("_", 1)[1])
    traj = Trajectory(method=method, level=GradientLevel(level), seed=seed)
    with open(path, encoding="utf-8") as fh:
        for line in fh:
            if not line.strip():
                continue
            record = json.loads(line)
            if record.get("final"):
                traj.final_losses = LossVector(record["losses"])
            else:
                traj.append(InterferenceSnapshot.from_record(record))
    if len(traj.snapshots) > 1:
        traj.cadence = traj.snapshots[1].iteration - traj.snapshots[0].iteration
    return traj


def final_losses(trajectories: List[Trajectory]) -> pd.Series:
    """loss_1..loss_T and total, averaged over seeds."""
    mean = pd.DataFrame([t.final_losses.values for t in trajectories]).mean(axis=0)
    final = pd.Series({f"loss_{i + 1}": float(v) for i, v in enumerate(mean)})
    final["total"] = float(mean.sum())
    return final


def load_cells(sweep_dir) -> List[CellResult]:
    """Completed cells listed as 'ok' in the manifest, in manifest order.

    Everything is rebuilt from the seed_<s>.jsonl files; summary.csv is not read.
    """
    sweep_dir = Path(sweep_dir)
    cells = []
    for row in read_manifest(sweep_dir).itertuples(index=False):
        if row.status != "ok":
            logger.info(f"[i] Skipping {row.cell}: {row.status}")
            continue
        cell_dir = sweep_dir / row.cell
        trajectories = [
            load_trajectory(path, row.method, row.level)
            for path in sorted(cell_dir.glob("seed_*.jsonl"), key=lambda p: int(p.stem.split("_", 1)[1]))
        ]
        if (cell_dir / "FAILED").exists() or not trajectories or any(t.final_losses is None for t in trajectories):
            logger.warning(f"[!] Cell {row.cell} is marked ok but has incomplete trajectories")
            continue
        cells.append(CellResult(row.cell, row.method, GradientLevel(row.level), trajectories, final_losses(trajectories)))
    return cells


def indicator_scores(cells: List[CellResult], tail: int = None, window: int = None) -> pd.DataFrame:
    """Per cell: trajectory_score of every indicator, averaged over seeds."""
    rows = {}
    for cell in cells:
        if not cell.trajectories:
            raise EmptyTrajectory(cell.label)
        rows[cell.label] = {
            name: float(pd.Series([trajectory_score(t, fld, tail, window) for t in cell.trajectories]).mean())
            for name, fld in INDICATORS.items()
        }
    return pd.DataFrame.from_dict(rows, orient="index")[list(INDICATORS)]


def performance_table(cells: List[CellResult]) -> pd.DataFrame:
    return pd.DataFrame({cell.label: cell.final for cell in cells}).T


def similarity_matrix(scores: pd.DataFrame, performance: pd.DataFrame) -> pd.DataFrame:
    """Converted ranking similarity of every indicator ranking against every
    performance ranking; lower loss ranks first."""
    labels = list(scores.index)
    matrix = pd.DataFrame(index=list(scores.columns), columns=list(performance.columns), dtype=float)
    for indicator in scores.columns:
        by_indicator = Ranking(labels, scores[indicator].tolist())
        for metric in performance.columns:
            by_metric = Ranking(labels, (-performance.loc[labels, metric]).tolist())
            matrix.loc[indicator, metric] = ranking_similarity(by_indicator, by_metric)[1]
    return matrix


def surrogate_gap(cells) -> pd.DataFrame:
    """(rep - param) / param of the final total loss for methods run at both levels.

    Accepts a sweep directory or already loaded cells.
    """
    if not isinstance(cells, list):
        cells = load_cells(cells)
    totals = {(c.method, c.level): float(c.final["total"]) for c in cells}
    rows = []
    for (method, level), rep in totals.items():
        if level is not GradientLevel.FEATURE or (method, GradientLevel.PARAM) not in totals:
            continue
        param = totals[(method, GradientLevel.PARAM)]
        gap = (rep - param) / param if param != 0 else float("nan")
        rows.append({"method": method, "param_total": param, "rep_total": rep, "gap": gap})
    return pd.DataFrame(rows, columns=["method", "param_total", "rep_total", "gap"])


# ==========================================================
# REPORT (read-only over the sweep, writes report.csv/.txt)
# ==========================================================
def report(sweep_dir, tail: int = None, window: int = None) -> ReportTable:
    sweep_dir = Path(sweep_dir)
    cells = load_cells(sweep_dir)
    if len(cells) < 2:
        raise InsufficientCells(len(cells))

    scores = indicator_scores(cells, tail, window)
    performance = performance_table(cells)
    table = ReportTable(
        matrix=similarity_matrix(scores, performance),
        scores=scores,
        performance=performance,
        gap=surrogate_gap(cells),
    )
    _write_atomic(sweep_dir / "report.csv", table.matrix.to_csv(index_label="indicator"))
    _write_atomic(sweep_dir / "report.txt", table.to_text())
    logger.info(f"[+] Report over {len(cells)} cells written to {sweep_dir / 'report.txt'}")
    return table
