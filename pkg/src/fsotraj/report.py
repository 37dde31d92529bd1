"""Run reports and their on-disk form.

Every number that a plot would need goes to CSV ('.' decimal separator,
header line, newline-terminated rows, full float precision so re-reading
reproduces values bit-exactly).
"""
from __future__ import annotations

from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .kinematics import (
    TrajectoryPlan,
    differentiate_trajectory,
    flight_power,
    kinetic_energy_delta,
    roll_from_motion,
    yaw_from_velocity,
)
from .mission import Scenario
from .optimizer import EfficiencyReport, IterationRecord


def _fmt(x) -> str:
    return format(float(x), ".17g")


def write_csv(path: Path, header: list[str], rows) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        fh.write(",".join(header) + "\n")
        for row in rows:
            fh.write(",".join(_fmt(v) if not isinstance(v, str) else v for v in row) + "\n")


def read_csv(path: Path) -> tuple[list[str], np.ndarray]:
    """Header plus a float array (object array if any column is textual)."""

    def cell(v):
        try:
            return float(v)
        except ValueError:
            return v

    with open(path, encoding="utf-8") as fh:
        header = fh.readline().strip().split(",")
        rows = [[cell(v) for v in line.strip().split(",")] for line in fh if line.strip()]
    if rows and all(isinstance(v, float) for v in rows[0]):
        return header, np.array(rows, dtype=float)
    return header, np.array(rows, dtype=object)


TRAJECTORY_HEADER = ["t", "x", "y", "z", "vx", "vy", "ax", "ay", "roll", "yaw", "se", "power"]
TRACE_HEADER = [
    "iteration",
    "lambda_star",
    "c_tot",
    "p_tot",
    "efficiency",
    "step_norm",
    "max_violation",
]
VALIDATION_HEADER = ["check", "reference", "estimate", "abs_error", "rel_error", "passed"]


@dataclass
class ValidationRow:
    check: str
    reference: float
    estimate: float
    tolerance_rel: float = 0.0
    one_sided: bool = False  # pass iff estimate <= reference (within slop)

    @property
    def rel_error(self) -> float:
        scale = max(abs(self.reference), 1e-300)
        return abs(self.estimate - self.reference) / scale

    @property
    def passed(self) -> bool:
        if self.one_sided:
            return self.estimate <= self.reference + self.tolerance_rel * max(abs(self.reference), 1.0)
        return self.rel_error <= self.tolerance_rel


@dataclass
class RunReport:
    """Everything one optimization run produced, re-runnable from the echo."""

    scenario_echo: str
    plan: TrajectoryPlan
    scenario: Scenario
    history: list[IterationRecord]
    efficiency: EfficiencyReport
    converged: bool
    wall_time: float
    validations: list[ValidationRow] = field(default_factory=list)

    def trajectory_rows(self):
        plan, sc = self.plan, self.scenario
        v, a = differentiate_trajectory(plan)
        n = plan.n_slots
        for k in range(n):
            a_k = a[min(k, n - 2)]
            yield (
                k * plan.delta,
                plan.positions[k, 0],
                plan.positions[k, 1],
                plan.positions[k, 2],
                v[k, 0],
                v[k, 1],
                a_k[0],
                a_k[1],
                roll_from_motion(v[k], a_k, sc.aircraft.g),
                yaw_from_velocity(v[k]),
                self.efficiency.capacity_per_slot[k],
                flight_power(v[k], a_k, sc.aircraft),
            )

    def summary_text(self) -> str:
        v, _ = differentiate_trajectory(self.plan)
        delta_ek = kinetic_energy_delta(v[0], v[-1], self.scenario.aircraft.mass)
        lines = [
            "run summary",
            "===========",
            f"slots: {self.plan.n_slots}",
            f"slot_length_s: {_fmt(self.plan.delta)}",
            f"altitude_m: {_fmt(self.plan.altitude)}",
            f"converged: {str(self.converged).lower()}",
            f"outer_iterations: {len(self.history)}",
            f"wall_time_s: {_fmt(self.wall_time)}",
            f"capacity_total_bits: {_fmt(self.efficiency.capacity_total)}",
            f"power_total_w: {_fmt(self.efficiency.power_total)}",
            f"efficiency: {_fmt(self.efficiency.efficiency)}",
            f"efficiency_mode: {self.efficiency.mode}",
            # Diagnostics only: bounded by the speed limits and excluded from
            # the optimized energy budget.
            f"kinetic_energy_delta_j: {_fmt(delta_ek)}",
        ]
        if self.history:
            last = self.history[-1]
            lines += [
                f"surrogate_efficiency: {_fmt(last.efficiency)}",
                f"lambda_star: {_fmt(last.lam_star)}",
                f"max_violation: {_fmt(max(r.max_violation for r in self.history))}",
            ]
        return "\n".join(lines) + "\n"


def write_outputs(report: RunReport, out_dir) -> list[str]:
    """Write the deterministic file set; returns the manifest."""
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    manifest = []

    (out / "scenario.echo").write_text(report.scenario_echo, encoding="utf-8")
    manifest.append("scenario.echo")

    write_csv(out / "trajectory.csv", TRAJECTORY_HEADER, report.trajectory_rows())
    manifest.append("trajectory.csv")

    write_csv(
        out / "efficiency_trace.csv",
        TRACE_HEADER,
        (
            (
                r.iteration,
                r.lam_star,
                r.c_tot,
                r.p_tot,
                r.efficiency,
                r.step_norm,
                r.max_violation,
            )
            for r in report.history
        ),
    )
    manifest.append("efficiency_trace.csv")

    rows = [
        (v.check, v.reference, v.estimate, abs(v.estimate - v.reference), v.rel_error, float(v.passed))
        for v in report.validations
    ]
    write_csv(out / "validation.csv", VALIDATION_HEADER, rows)
    manifest.append("validation.csv")

    (out / "report").write_text(report.summary_text(), encoding="utf-8")
    manifest.append("report")
    return manifest


def read_report_value(out_dir, key: str) -> float:
    for line in (Path(out_dir) / "report").read_text(encoding="utf-8").splitlines():
        if line.startswith(key + ":"):
            return float(line.split(":", 1)[1])
    raise KeyError(f"{key} not found in report")
