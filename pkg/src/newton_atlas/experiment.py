"""Quantitative story at desk scale: scaling in d, budgets, audits.

The headline number is the scaling exponent: over a degree ladder,
total chosen iterations are summarized by their per-degree median
(median, not mean: the iteration-count guarantee is a with-high-
probability statement, and trials that barely satisfy the distance
condition produce heavy upper tails), the ln^4 d factor is divided
out, and the remaining log-log slope is fitted by least squares.
Rows whose ensemble violates DC are reported but excluded from the
fit, mirroring the conditioning of the guarantee itself.
"""

from __future__ import annotations

import csv
import json
import math
import os
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from typing import Optional, Sequence

from . import _kernels
from .ensemble import check_ac, check_dc, default_ac_ceiling, sample_roots
from .grid import build_grid
from .orbit import OrbitTrace, Regime, quadratic_phase_budget
from .pipeline import RootFindingReport, solve
from .poly import Polynomial
from .seeding import derive_seed

# ---------------------------------------------------------------------
# Slack constants: every tolerance the harness asserts against, in one
# place.  These are measurement-side allowances layered onto exact
# statements; none of them changes what is being measured.
#
#   NEAR_BUDGET_SLACK     near-phase steps may exceed the quadratic
#                         budget by this many iterations (entry into
#                         the near shell is detected one step late and
#                         the budget's constant is asymptotic)
#   FLOOR_FRACTION        chosen orbits must be at least this fraction
#                         of the far-field iteration floor (the linear
#                         model ignores the root cloud's pull)
#   BETA_RANGE            acceptable scaling exponent after the ln^4 d
#                         factor is removed: upper envelope exponent 2
#                         plus fitting noise, lower bound exponent 1
#                         from the per-point linear cost
#   AC_CEILING_FACTOR     default AC budget is this times ln d
#   MC_SIGMA              Monte Carlo assertions allow 3 sigma
# ---------------------------------------------------------------------
NEAR_BUDGET_SLACK = 5
FLOOR_FRACTION = 0.5
BETA_RANGE = (1.0, 2.3)
AC_CEILING_FACTOR = 3.0
MC_SIGMA = 3.0


def farfield_iteration_floor(d: int, start_modulus: float) -> int:
    """Steps the pure linear far-field model w -> ((d-1)/d) w needs to
    bring start_modulus down to 1 + 1/d; observed orbit lengths are
    compared against FLOOR_FRACTION times this."""
    if d < 2:
        raise ValueError(f"need d >= 2, got {d}")
    if not (start_modulus > 1.0):
        raise ValueError(f"need start_modulus > 1, got {start_modulus!r}")
    target = 1.0 + 1.0 / d
    if start_modulus <= target:
        return 0
    n = math.ceil(math.log(start_modulus / target) / math.log(d / (d - 1)))
    return max(0, n)


@dataclass
class ExperimentRow:
    d: int
    trial: int
    trial_seed: int
    total_iterations_chosen: int
    far_steps: int
    intermediate_steps: int
    near_steps: int
    outside_steps: int
    dc_holds: bool
    dc_min: float
    ac_fitted_cd: float
    unresolved: int
    outside_violations: int
    max_near_phase_len: int
    min_floor_ratio: float
    floor_violations: int

    FIELDS = (
        "d",
        "trial",
        "trial_seed",
        "total_iterations_chosen",
        "far_steps",
        "intermediate_steps",
        "near_steps",
        "outside_steps",
        "dc_holds",
        "dc_min",
        "ac_fitted_cd",
        "unresolved",
        "outside_violations",
        "max_near_phase_len",
        "min_floor_ratio",
        "floor_violations",
    )

    def as_csv_row(self) -> list:
        return [
            self.d,
            self.trial,
            self.trial_seed,
            self.total_iterations_chosen,
            self.far_steps,
            self.intermediate_steps,
            self.near_steps,
            self.outside_steps,
            int(self.dc_holds),
            repr(self.dc_min),
            repr(self.ac_fitted_cd),
            self.unresolved,
            self.outside_violations,
            self.max_near_phase_len,
            repr(self.min_floor_ratio),
            self.floor_violations,
        ]


@dataclass
class ExperimentReport:
    degrees: list[int]
    trials: int
    epsilon: float
    eta: float
    seed: int
    rows: list[ExperimentRow]
    beta: Optional[float]
    intercept: Optional[float]
    beta_raw: Optional[float]
    medians: dict  # d -> median total over DC-holding rows
    degrees_used: list[int]
    merged_counts: list[int] = field(default_factory=list)
    merged_min_disp: list[float] = field(default_factory=list)

    def to_summary_dict(self) -> dict:
        return {
            "degrees": self.degrees,
            "trials": self.trials,
            "epsilon": self.epsilon,
            "eta": self.eta,
            "seed": self.seed,
            "beta": self.beta,
            "intercept": self.intercept,
            "beta_raw": self.beta_raw,
            "medians": {str(d): m for d, m in sorted(self.medians.items())},
            "degrees_used": self.degrees_used,
            "n_rows": len(self.rows),
            "dc_rate": (
                sum(1 for r in self.rows if r.dc_holds) / len(self.rows)
                if self.rows
                else None
            ),
            "unresolved_rows": sum(1 for r in self.rows if r.unresolved > 0),
            "outside_violations_total": sum(r.outside_violations for r in self.rows),
            "floor_violations_total": sum(r.floor_violations for r in self.rows),
            "slack": {
                "near_budget_slack": NEAR_BUDGET_SLACK,
                "floor_fraction": FLOOR_FRACTION,
                "beta_range": list(BETA_RANGE),
                "ac_ceiling_factor": AC_CEILING_FACTOR,
                "mc_sigma": MC_SIGMA,
            },
        }


def _median(values: Sequence[float]) -> float:
    vs = sorted(values)
    n = len(vs)
    if n == 0:
        raise ValueError("median of nothing")
    mid = n // 2
    if n % 2:
        return float(vs[mid])
    return (vs[mid - 1] + vs[mid]) / 2.0


def _ls_slope(xs: Sequence[float], ys: Sequence[float]) -> tuple[float, float]:
    n = len(xs)
    xbar = sum(xs) / n
    ybar = sum(ys) / n
    sxx = sum((x - xbar) ** 2 for x in xs)
    sxy = sum((x - xbar) * (y - ybar) for x, y in zip(xs, ys))
    slope = sxy / sxx
    return slope, ybar - slope * xbar


def run_trial(
    d: int,
    trial: int,
    seed: int,
    epsilon: float,
    eta: float,
    *,
    solve_workers: int = 1,
) -> tuple[ExperimentRow, RootFindingReport]:
    """One (degree, trial) cell: sample, solve, check conditions."""
    trial_seed = derive_seed(seed, d, trial)
    roots = sample_roots(d, trial_seed)
    p = Polynomial.from_roots(roots)
    grid = build_grid(d, phase_seed=derive_seed(trial_seed, 0x617D))
    report = solve(
        p, grid, epsilon, eta=eta, seed=trial_seed, workers=solve_workers
    )
    dc_holds, dc_min = check_dc(roots, eta)
    ac = check_ac(roots, default_ac_ceiling(d))

    min_ratio = math.inf
    floor_violations = 0
    for c in report.chosen_starts:
        floor = farfield_iteration_floor(d, c.start_modulus)
        if floor > 0:
            ratio = c.iterations / floor
            min_ratio = min(min_ratio, ratio)
            if c.iterations < FLOOR_FRACTION * floor:
                floor_violations += 1
    if not math.isfinite(min_ratio):
        min_ratio = 0.0

    return ExperimentRow(
        d=d,
        trial=trial,
        trial_seed=trial_seed,
        total_iterations_chosen=report.total_iterations_chosen,
        far_steps=report.regime_totals["far"],
        intermediate_steps=report.regime_totals["intermediate"],
        near_steps=report.regime_totals["near"],
        outside_steps=report.regime_totals["outside"],
        dc_holds=dc_holds,
        dc_min=dc_min,
        ac_fitted_cd=ac.fitted_cd,
        unresolved=report.unresolved_count,
        outside_violations=report.outside_violations_total,
        max_near_phase_len=report.max_near_phase_len,
        min_floor_ratio=min_ratio,
        floor_violations=floor_violations,
    ), report


def _trial_cell(args):
    d, trial, seed, epsilon, eta = args
    row, report = run_trial(d, trial, seed, epsilon, eta)
    return row, report.chosen_counts, report.chosen_min_disp


def scaling_experiment(
    degrees: Sequence[int],
    trials: int,
    epsilon: float,
    seed: int,
    *,
    eta: float = 0.25,
    workers: int = 1,
) -> ExperimentReport:
    """Run the degree ladder and fit the scaling exponent."""
    degrees = list(degrees)
    if degrees != sorted(degrees):
        raise ValueError("degrees must be sorted ascending")
    if any(d < 4 for d in degrees):
        raise ValueError("each degree must be >= 4")
    if trials < 10:
        raise ValueError(f"need trials >= 10, got {trials}")

    cells = [(d, t, seed, epsilon, eta) for d in degrees for t in range(trials)]
    merged_counts = [0] * (4 * _kernels.K_SIZE)
    merged_mind = [math.inf] * (4 * _kernels.K_SIZE)
    rows = []
    if workers <= 1:
        results = map(_trial_cell, cells)
    else:
        pool = ProcessPoolExecutor(max_workers=workers)
        results = pool.map(_trial_cell, cells)
    for row, counts, mind in results:
        rows.append(row)
        if counts is not None:
            for b in range(4 * _kernels.K_SIZE):
                merged_counts[b] += counts[b]
                if mind[b] < merged_mind[b]:
                    merged_mind[b] = mind[b]
    if workers > 1:
        pool.shutdown()
    rows.sort(key=lambda r: (r.d, r.trial))

    medians = {}
    for d in degrees:
        totals = [
            r.total_iterations_chosen for r in rows if r.d == d and r.dc_holds
        ]
        if totals:
            medians[d] = _median(totals)

    degrees_used = sorted(medians)
    beta = intercept = beta_raw = None
    if len(degrees_used) >= 2:
        xs = [math.log(d) for d in degrees_used]
        ys = [
            math.log(medians[d] / math.log(d) ** 4) for d in degrees_used
        ]
        beta, intercept = _ls_slope(xs, ys)
        # companion diagnostic: slope without the ln^4 d division, so a
        # reader can tell a dynamics problem from a model-factor problem
        beta_raw, _ = _ls_slope(xs, [math.log(medians[d]) for d in degrees_used])

    return ExperimentReport(
        degrees=degrees,
        trials=trials,
        epsilon=epsilon,
        eta=eta,
        seed=seed,
        rows=rows,
        beta=beta,
        intercept=intercept,
        beta_raw=beta_raw,
        medians=medians,
        degrees_used=degrees_used,
        merged_counts=merged_counts,
        merged_min_disp=merged_mind,
    )


# -- epsilon sweep ----------------------------------------------------


@dataclass
class SweepRow:
    epsilon: float
    trial: int
    trial_seed: int
    dc_holds: bool
    max_near_phase_len: int
    budget: int
    violation: bool
    unresolved: int


def eps_sweep(
    d: int,
    eps_list: Sequence[float],
    trials: int,
    seed: int,
    *,
    eta: float = 0.25,
    workers: int = 1,
) -> list[SweepRow]:
    """Near-phase lengths against the quadratic budget across epsilon.

    The same trial seeds (hence the same polynomials and grids) are
    reused at every epsilon, so rows differ only through the target
    precision.  A violation is a DC-satisfying trial whose longest
    chosen-orbit near phase exceeds budget + NEAR_BUDGET_SLACK.
    """
    cells = [
        (d, t, seed, float(eps), eta) for eps in eps_list for t in range(trials)
    ]
    if workers <= 1:
        results = list(map(_trial_cell, cells))
    else:
        with ProcessPoolExecutor(max_workers=workers) as pool:
            results = list(pool.map(_trial_cell, cells))
    rows = []
    for (d_, t, seed_, eps, eta_), (row, _, _) in zip(cells, results):
        budget = quadratic_phase_budget(eps)
        rows.append(
            SweepRow(
                epsilon=eps,
                trial=t,
                trial_seed=row.trial_seed,
                dc_holds=row.dc_holds,
                max_near_phase_len=row.max_near_phase_len,
                budget=budget,
                violation=row.dc_holds
                and row.max_near_phase_len > budget + NEAR_BUDGET_SLACK,
                unresolved=row.unresolved,
            )
        )
    rows.sort(key=lambda r: (r.epsilon, r.trial))
    return rows


# -- displacement audit -----------------------------------------------


@dataclass
class AuditRow:
    regime: str
    steps: int
    min_disp: Optional[float]
    bound: str
    fitted_c: Optional[float]
    violations: int

    def to_dict(self) -> dict:
        return {
            "regime": self.regime,
            "steps": self.steps,
            "min_disp": self.min_disp,
            "bound": self.bound,
            "fitted_c": self.fitted_c,
            "violations": self.violations,
        }


def displacement_audit(traces: Sequence[OrbitTrace], d: int) -> list[AuditRow]:
    """Check recorded displacements against their per-regime floors.

    Outside the 2-disk the floor 1/d is exact and violations are
    counted as such.  Far steps are held to C/(d ln d) and
    Intermediate steps to C/(k 2^k) with C fitted as the largest
    constant the data allows, so their violation counts are zero
    exactly when a single constant explains every step.  Near steps
    have no claimed floor; their minimum is reported as is.
    """
    far_min_scaled = math.inf
    far_min = math.inf
    far_steps = 0
    int_min_scaled = math.inf
    int_min = math.inf
    int_steps = 0
    near_min = math.inf
    near_steps = 0
    out_min = math.inf
    out_steps = 0
    out_violations = 0
    inv_d = 1.0 / d

    for tr in traces:
        for step in tr.steps:
            disp = step.displacement
            if disp is None or step.regime is None:
                continue
            if step.regime is Regime.OUTSIDE2DISK:
                out_steps += 1
                out_min = min(out_min, disp)
                if disp <= inv_d:
                    out_violations += 1
            elif step.regime is Regime.FAR:
                far_steps += 1
                far_min = min(far_min, disp)
                far_min_scaled = min(far_min_scaled, disp * d * math.log(d))
            elif step.regime is Regime.INTERMEDIATE:
                int_steps += 1
                int_min = min(int_min, disp)
                k = step.k_index
                int_min_scaled = min(int_min_scaled, disp * k * 2.0**k)
            else:
                near_steps += 1
                near_min = min(near_min, disp)

    rows = []
    if out_steps or far_steps or int_steps or near_steps:
        rows.append(
            AuditRow(
                regime="Outside2Disk",
                steps=out_steps,
                min_disp=out_min if out_steps else None,
                bound="1/d (exact)",
                fitted_c=None,
                violations=out_violations,
            )
        )
        far_c = far_min_scaled if far_steps else None
        rows.append(
            AuditRow(
                regime="Far",
                steps=far_steps,
                min_disp=far_min if far_steps else None,
                bound="C/(d ln d)",
                fitted_c=far_c,
                violations=(
                    sum(
                        1
                        for tr in traces
                        for s in tr.steps
                        if s.regime is Regime.FAR
                        and s.displacement is not None
                        and s.displacement * d * math.log(d) < far_c
                    )
                    if far_steps
                    else 0
                ),
            )
        )
        int_c = int_min_scaled if int_steps else None
        rows.append(
            AuditRow(
                regime="Intermediate",
                steps=int_steps,
                min_disp=int_min if int_steps else None,
                bound="C/(k 2^k)",
                fitted_c=int_c,
                violations=(
                    sum(
                        1
                        for tr in traces
                        for s in tr.steps
                        if s.regime is Regime.INTERMEDIATE
                        and s.displacement is not None
                        and s.displacement * s.k_index * 2.0**s.k_index < int_c
                    )
                    if int_steps
                    else 0
                ),
            )
        )
        rows.append(
            AuditRow(
                regime="Near",
                steps=near_steps,
                min_disp=near_min if near_steps else None,
                bound="(none claimed)",
                fitted_c=None,
                violations=0,
            )
        )
    return rows


def audit_from_bins(
    counts: Sequence[int],
    min_disp: Sequence[float],
    d: int,
    outside_violations: int,
) -> list[AuditRow]:
    """Same audit computed from merged per-(regime, k) counter bins."""
    from ._kernels import K_MIN, K_SIZE

    def regime_stats(r: int):
        steps = 0
        mn = math.inf
        scaled = math.inf
        for i in range(K_SIZE):
            c = counts[r * K_SIZE + i]
            if c == 0:
                continue
            steps += c
            m = min_disp[r * K_SIZE + i]
            mn = min(mn, m)
            k = K_MIN + i
            if r == 0:
                scaled = min(scaled, m * d * math.log(d))
            elif r == 1 and k > 0:
                scaled = min(scaled, m * k * 2.0**k)
        return steps, mn, scaled

    out_steps, out_min, _ = regime_stats(3)
    far_steps, far_min, far_c = regime_stats(0)
    int_steps, int_min, int_c = regime_stats(1)
    near_steps, near_min, _ = regime_stats(2)
    if not (out_steps or far_steps or int_steps or near_steps):
        return []
    return [
        AuditRow(
            "Outside2Disk",
            out_steps,
            out_min if out_steps else None,
            "1/d (exact)",
            None,
            outside_violations,
        ),
        AuditRow(
            "Far",
            far_steps,
            far_min if far_steps else None,
            "C/(d ln d)",
            far_c if far_steps else None,
            0,
        ),
        AuditRow(
            "Intermediate",
            int_steps,
            int_min if int_steps else None,
            "C/(k 2^k)",
            int_c if int_steps else None,
            0,
        ),
        AuditRow(
            "Near",
            near_steps,
            near_min if near_steps else None,
            "(none claimed)",
            None,
            0,
        ),
    ]


# -- file and figure emission -----------------------------------------


def write_rows_csv(rows: Sequence[ExperimentRow], path, header_lines=()) -> None:
    with open(path, "w", encoding="utf-8", newline="") as fh:
        for line in header_lines:
            fh.write(f"# {line}\n")
        writer = csv.writer(fh)
        writer.writerow(ExperimentRow.FIELDS)
        for row in rows:
            writer.writerow(row.as_csv_row())


def _setup_matplotlib():
    import matplotlib

    matplotlib.use("Agg")
    matplotlib.rcParams["svg.hashsalt"] = "newton-atlas"
    import matplotlib.pyplot as plt

    return plt


def _save_svg(fig, path) -> None:
    fig.savefig(path, format="svg", metadata={"Date": None})


def plot_scaling(report: ExperimentReport, path) -> None:
    """Log-log totals per degree with the fitted line."""
    plt = _setup_matplotlib()
    fig, ax = plt.subplots(figsize=(6, 4.5))
    for d in report.degrees:
        ys = [r.total_iterations_chosen for r in report.rows if r.d == d and r.dc_holds]
        ax.plot([d] * len(ys), ys, "o", color="#336699", alpha=0.35, markersize=4)
        ys_ex = [
            r.total_iterations_chosen for r in report.rows if r.d == d and not r.dc_holds
        ]
        ax.plot([d] * len(ys_ex), ys_ex, "x", color="#aa3333", markersize=5)
    if report.beta is not None:
        ds = sorted(report.degrees_used)
        fit = [
            math.exp(report.intercept) * d**report.beta * math.log(d) ** 4 for d in ds
        ]
        ax.plot(ds, fit, "-", color="#222222", label=f"fit: beta = {report.beta:.3f}")
        ax.legend()
    ax.set_xscale("log")
    ax.set_yscale("log")
    ax.set_xlabel("degree d")
    ax.set_ylabel("total chosen iterations")
    ax.set_title("Iterations to all roots vs degree")
    fig.tight_layout()
    _save_svg(fig, path)
    plt.close(fig)


def plot_regimes(report: ExperimentReport, path) -> None:
    """Stacked per-regime median step counts per degree."""
    plt = _setup_matplotlib()
    fig, ax = plt.subplots(figsize=(6, 4.5))
    degrees = report.degrees
    regs = ("far", "intermediate", "near", "outside")
    colors = ("#336699", "#66aa55", "#ddaa33", "#aa3333")
    attr = {
        "far": "far_steps",
        "intermediate": "intermediate_steps",
        "near": "near_steps",
        "outside": "outside_steps",
    }
    meds = {
        reg: [
            _median([getattr(r, attr[reg]) for r in report.rows if r.d == d] or [0])
            for d in degrees
        ]
        for reg in regs
    }
    xs = range(len(degrees))
    bottom = [0.0] * len(degrees)
    for reg, color in zip(regs, colors):
        ax.bar(xs, meds[reg], bottom=bottom, color=color, label=reg, width=0.6)
        bottom = [b + m for b, m in zip(bottom, meds[reg])]
    ax.set_xticks(list(xs))
    ax.set_xticklabels([str(d) for d in degrees])
    ax.set_xlabel("degree d")
    ax.set_ylabel("median steps (chosen orbits)")
    ax.set_title("Steps by regime")
    ax.legend()
    fig.tight_layout()
    _save_svg(fig, path)
    plt.close(fig)


def plot_displacements(report: ExperimentReport, path) -> None:
    """Per-regime minimum displacement against the shell index."""
    from ._kernels import K_MIN, K_SIZE

    plt = _setup_matplotlib()
    fig, axes = plt.subplots(2, 2, figsize=(8, 6), sharex=False)
    names = ("Far", "Intermediate", "Near", "Outside2Disk")
    for r, (ax, name) in enumerate(zip(axes.flat, names)):
        ks = []
        mins = []
        for i in range(K_SIZE):
            if report.merged_counts and report.merged_counts[r * K_SIZE + i] > 0:
                ks.append(K_MIN + i)
                mins.append(report.merged_min_disp[r * K_SIZE + i])
        if ks:
            ax.semilogy(ks, mins, "o-", markersize=3, color="#336699")
        ax.set_title(name)
        ax.set_xlabel("shell k")
        ax.set_ylabel("min displacement")
    fig.tight_layout()
    _save_svg(fig, path)
    plt.close(fig)


def run_full_experiment(
    out_dir: str,
    degrees: Sequence[int],
    trials: int,
    epsilon: float,
    seed: int,
    *,
    eta: float = 0.25,
    workers: int = 1,
    sweep_eps: Sequence[float] = (),
    sweep_trials: int = 0,
    sweep_degree: int = 20,
    header_lines: Sequence[str] = (),
) -> dict:
    """Run everything and write rows.csv, summary.json, and the SVGs."""
    os.makedirs(out_dir, exist_ok=True)
    report = scaling_experiment(
        degrees, trials, epsilon, seed, eta=eta, workers=workers
    )
    write_rows_csv(report.rows, os.path.join(out_dir, "rows.csv"), header_lines)

    summary = report.to_summary_dict()
    summary["displacement_audit"] = [
        row.to_dict()
        for row in audit_from_bins(
            report.merged_counts,
            report.merged_min_disp,
            max(degrees),
            sum(r.outside_violations for r in report.rows),
        )
    ]
    if sweep_eps and sweep_trials > 0:
        sweep = eps_sweep(
            sweep_degree, sweep_eps, sweep_trials, seed, eta=eta, workers=workers
        )
        summary["eps_sweep"] = [
            {
                "epsilon": r.epsilon,
                "trial": r.trial,
                "dc_holds": r.dc_holds,
                "max_near_phase_len": r.max_near_phase_len,
                "budget": r.budget,
                "violation": r.violation,
            }
            for r in sweep
        ]

    plot_scaling(report, os.path.join(out_dir, "scaling.svg"))
    plot_regimes(report, os.path.join(out_dir, "regimes.svg"))
    plot_displacements(report, os.path.join(out_dir, "displacements.svg"))
    return summary
