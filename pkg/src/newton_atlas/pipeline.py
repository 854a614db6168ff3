"""End-to-end root finding: grid -> orbits -> clusters -> report.

Two passes over the grid.  Pass 1 runs every starting point in the
cheapest kernel mode and keeps one summary tuple per orbit.  Pass 2
re-runs only the d winning starts (minimal iterations per recovered
root, ties to the smallest grid index) with counters and, on request,
full traces.  Reruns are exact replays: the kernel is deterministic
given the same jitter seed, and a mismatch between passes is treated
as an internal error.
"""

from __future__ import annotations

import math
import warnings
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from typing import Optional, Sequence

from . import _kernels
from .errors import AmbiguousClusteringWarning, InvalidDegree
from .grid import StartingGrid, r_central_bound
from .orbit import (
    DEFAULT_ETA,
    DEFAULT_TRACE_CAP,
    DIVERGENCE_FACTOR,
    Outcome,
    OrbitTrace,
    default_max_iter,
    far_k_threshold,
    near_k_threshold,
    run_orbit,
)
from .poly import Polynomial
from .seeding import derive_seed

# Orbits that epsilon-converged to one root land within a few epsilon
# of each other; 100x covers that with two orders to spare.
CLUSTER_RADIUS_FACTOR = 100.0
CLUSTER_RADIUS_FLOOR = 1e-12

# A cluster whose bounding box spans more than this many link radii
# has chained across what should be distinct roots.
AMBIGUOUS_WIDTH_FACTOR = 10.0

# Tolerance for matching a cluster center to a known true root: the
# center is a mean of points each within epsilon of the root, so 1.5x
# absorbs the averaging arithmetic.
MATCH_TOLERANCE_FACTOR = 1.5


@dataclass
class Cluster:
    center: complex
    members: list[int]
    width: float
    ambiguous: bool


def default_cluster_radius(epsilon: float) -> float:
    return max(CLUSTER_RADIUS_FACTOR * epsilon, CLUSTER_RADIUS_FLOOR)


def cluster_roots(terminals: Sequence[complex], radius: float) -> list[Cluster]:
    """Single-linkage clustering at link threshold radius.

    Points at distance <= radius are linked; connected components are
    clusters with center = mean of members.  Components wider than
    AMBIGUOUS_WIDTH_FACTOR * radius are flagged (and warned about):
    distinct roots may sit below the resolution.
    """
    if not (radius > 0.0):
        raise ValueError(f"radius must be positive, got {radius!r}")
    n = len(terminals)
    if n == 0:
        return []

    parent = list(range(n))

    def find(i: int) -> int:
        while parent[i] != i:
            parent[i] = parent[parent[i]]
            i = parent[i]
        return i

    def union(i: int, j: int) -> None:
        ri, rj = find(i), find(j)
        if ri != rj:
            parent[max(ri, rj)] = min(ri, rj)

    buckets: dict[tuple[int, int], list[int]] = {}
    keys = []
    for i, t in enumerate(terminals):
        key = (math.floor(t.real / radius), math.floor(t.imag / radius))
        keys.append(key)
        buckets.setdefault(key, []).append(i)

    r2 = radius * radius
    for i, t in enumerate(terminals):
        kx, ky = keys[i]
        for bx in (kx - 1, kx, kx + 1):
            for by in (ky - 1, ky, ky + 1):
                for j in buckets.get((bx, by), ()):
                    if j <= i:
                        continue
                    u = terminals[j]
                    dx = t.real - u.real
                    dy = t.imag - u.imag
                    if dx * dx + dy * dy <= r2:
                        union(i, j)

    groups: dict[int, list[int]] = {}
    for i in range(n):
        groups.setdefault(find(i), []).append(i)

    clusters = []
    for root in sorted(groups):
        members = sorted(groups[root])
        sx = 0.0
        sy = 0.0
        min_x = min_y = math.inf
        max_x = max_y = -math.inf
        for i in members:
            t = terminals[i]
            sx += t.real
            sy += t.imag
            min_x = min(min_x, t.real)
            max_x = max(max_x, t.real)
            min_y = min(min_y, t.imag)
            max_y = max(max_y, t.imag)
        dx = max_x - min_x
        dy = max_y - min_y
        width = math.sqrt(dx * dx + dy * dy)
        ambiguous = width > AMBIGUOUS_WIDTH_FACTOR * radius
        if ambiguous:
            warnings.warn(
                f"cluster of {len(members)} terminal points spans {width:.3e}, "
                f"more than {AMBIGUOUS_WIDTH_FACTOR:g}x the link radius "
                f"{radius:.3e}; distinct roots may have merged",
                AmbiguousClusteringWarning,
                stacklevel=2,
            )
        # a zero-width cluster is all one point; the mean must be that
        # point exactly, not that point plus accumulated rounding
        if width == 0.0:
            center = terminals[members[0]]
        else:
            center = complex(sx / len(members), sy / len(members))
        clusters.append(
            Cluster(
                center=center,
                members=members,
                width=width,
                ambiguous=ambiguous,
            )
        )
    return clusters


@dataclass
class FoundRoot:
    center: complex
    radius: float
    n_orbits: int
    width: float
    ambiguous: bool
    matched_root_index: Optional[int]


@dataclass
class ChosenStart:
    grid_index: int
    iterations: int
    start_modulus: float
    first_near_iter: int
    near_phase_len: int
    regime_steps: tuple[int, int, int, int]


@dataclass
class RootFindingReport:
    polynomial_id: str
    degree: int
    epsilon: float
    eta: float
    backend: str
    cluster_radius: float
    found_roots: list[FoundRoot]
    chosen_starts: list[ChosenStart]
    total_iterations_chosen: int
    regime_totals: dict
    unresolved_count: int
    orbit_outcomes: dict
    outside_violations_total: int
    outside_min_disp: float
    n_grid_points: int
    skipped_orbits: int
    chosen_counts: Optional[list[int]] = None
    chosen_min_disp: Optional[list[float]] = None
    traces: Optional[dict] = None  # grid_index -> OrbitTrace, on request

    @property
    def max_near_phase_len(self) -> int:
        return max((c.near_phase_len for c in self.chosen_starts), default=0)

    def to_json_dict(self) -> dict:
        return {
            "polynomial_id": self.polynomial_id,
            "degree": self.degree,
            "epsilon": self.epsilon,
            "eta": self.eta,
            "backend": self.backend,
            "cluster_radius": self.cluster_radius,
            "found_roots": [
                {
                    "center": [f.center.real, f.center.imag],
                    "radius": f.radius,
                    "n_orbits": f.n_orbits,
                    "width": f.width,
                    "ambiguous": f.ambiguous,
                    "matched_root_index": f.matched_root_index,
                }
                for f in self.found_roots
            ],
            "chosen_starts": [
                {
                    "grid_index": c.grid_index,
                    "iterations": c.iterations,
                    "start_modulus": c.start_modulus,
                    "first_near_iter": c.first_near_iter,
                    "near_phase_len": c.near_phase_len,
                    "regime_steps": list(c.regime_steps),
                }
                for c in self.chosen_starts
            ],
            "total_iterations_chosen": self.total_iterations_chosen,
            "regime_totals": dict(self.regime_totals),
            "unresolved_count": self.unresolved_count,
            "orbit_outcomes": dict(self.orbit_outcomes),
            "outside_violations_total": self.outside_violations_total,
            "outside_min_disp": (
                self.outside_min_disp if math.isfinite(self.outside_min_disp) else None
            ),
            "n_grid_points": self.n_grid_points,
            "skipped_orbits": self.skipped_orbits,
        }


def _summaries_chunk(args):
    """Worker payload: mode-0 kernel runs over one slice of grid points."""
    (
        roots_re,
        roots_im,
        pts,
        epsilon,
        max_iter,
        div_radius,
        far_k,
        near_k,
        seed,
    ) = args
    out = []
    for gi, zr, zi in pts:
        r = _kernels.run_orbit_kernel(
            zr,
            zi,
            roots_re,
            roots_im,
            epsilon,
            max_iter,
            div_radius,
            far_k,
            near_k,
            0,
            derive_seed(seed, gi),
            1,
            0,
        )
        out.append((gi,) + r[:14])
    return out


def solve(
    p: Polynomial,
    grid: StartingGrid,
    epsilon: float,
    *,
    eta: float = DEFAULT_ETA,
    max_iter: Optional[int] = None,
    workers: int = 1,
    seed: int = 0,
    cluster_radius: Optional[float] = None,
    early_exit: bool = False,
    collect_traces: bool = False,
    trace_cap: int = DEFAULT_TRACE_CAP,
) -> RootFindingReport:
    """Run every grid orbit, cluster the terminals, pick the d winners.

    With known roots each converged orbit also carries the index of
    the root it reached; clusters are cross-checked against the true
    roots and unresolved_count reports how many roots no cluster hit.
    With coefficients only, convergence uses the small-step rule and
    unresolved_count is d minus the number of clusters found.

    early_exit stops launching new orbits once d clusters exist and
    every remaining start sits within epsilon of an already-seen
    terminal; winners are then picked among the launched orbits only.
    """
    if grid.degree != p.degree:
        raise InvalidDegree(
            f"grid is for degree {grid.degree}, polynomial has degree {p.degree}"
        )
    if not (0.0 < epsilon <= 1e-2):
        raise ValueError(f"epsilon must lie in (0, 1e-2], got {epsilon!r}")
    if max_iter is None:
        max_iter = default_max_iter(p.degree, epsilon)
    if cluster_radius is None:
        cluster_radius = default_cluster_radius(epsilon)

    if p.roots is None:
        return _solve_coeffs(
            p, grid, epsilon, eta=eta, max_iter=max_iter, seed=seed,
            cluster_radius=cluster_radius, collect_traces=collect_traces,
            trace_cap=trace_cap,
        )

    d = p.degree
    roots_re = [a.real for a in p.roots]
    roots_im = [a.imag for a in p.roots]
    div_radius = DIVERGENCE_FACTOR * r_central_bound(max(d, 2))
    far_k = far_k_threshold(d)
    near_k = near_k_threshold(d, eta)

    n_pts = len(grid.points)
    # inner circles first: scheduling choice only, invisible in the
    # report because results are merged by grid index
    order = list(range(n_pts - 1, -1, -1))

    chunk_size = max(1, math.ceil(n_pts / max(1, workers * 4)))
    chunks = []
    for lo in range(0, n_pts, chunk_size):
        idxs = order[lo : lo + chunk_size]
        chunks.append([(gi, grid.points[gi].real, grid.points[gi].imag) for gi in idxs])

    def chunk_args(pts):
        return (
            roots_re,
            roots_im,
            pts,
            epsilon,
            max_iter,
            div_radius,
            far_k,
            near_k,
            seed,
        )

    summaries: dict[int, tuple] = {}
    skipped = 0

    def note(results):
        for row in results:
            summaries[row[0]] = row

    def remaining_covered(done_upto: int) -> bool:
        terminals = [
            complex(row[3], row[4])
            for row in summaries.values()
            if row[1] == _kernels.OUTCOME_CONVERGED
        ]
        if len(cluster_roots(terminals, cluster_radius)) < d:
            return False
        eps2 = epsilon * epsilon
        for ch in chunks[done_upto:]:
            for gi, zr, zi in ch:
                if not any(
                    (zr - t.real) ** 2 + (zi - t.imag) ** 2 < eps2 for t in terminals
                ):
                    return False
        return True

    if workers <= 1 or len(chunks) <= 1:
        for ci, ch in enumerate(chunks):
            note(_summaries_chunk(chunk_args(ch)))
            if early_exit and ci + 1 < len(chunks) and remaining_covered(ci + 1):
                skipped = sum(len(c) for c in chunks[ci + 1 :])
                break
    else:
        with ProcessPoolExecutor(max_workers=workers) as pool:
            if early_exit:
                for ci, results in enumerate(
                    pool.map(_summaries_chunk, [chunk_args(c) for c in chunks])
                ):
                    note(results)
                    if ci + 1 < len(chunks) and remaining_covered(ci + 1):
                        skipped = sum(len(c) for c in chunks[ci + 1 :])
                        break
            else:
                for results in pool.map(
                    _summaries_chunk, [chunk_args(c) for c in chunks]
                ):
                    note(results)

    # -- cluster converged terminals ---------------------------------
    conv_rows = sorted(
        row for row in summaries.values() if row[1] == _kernels.OUTCOME_CONVERGED
    )
    terminals = [complex(row[3], row[4]) for row in conv_rows]
    clusters = cluster_roots(terminals, cluster_radius)

    outcome_counts = {"converged": 0, "diverged": 0, "stalled": 0, "critical": 0}
    outcome_names = {
        _kernels.OUTCOME_CONVERGED: "converged",
        _kernels.OUTCOME_DIVERGED: "diverged",
        _kernels.OUTCOME_STALLED: "stalled",
        _kernels.OUTCOME_CRITICAL: "critical",
    }
    outside_violations_total = 0
    outside_min = math.inf
    for row in summaries.values():
        outcome_counts[outcome_names[row[1]]] += 1
        outside_min = min(outside_min, row[12])
        outside_violations_total += row[13]

    # -- pick the cheapest start per cluster -------------------------
    chosen_raw = []  # (grid_index, iterations, cluster_idx)
    for ci, cl in enumerate(clusters):
        best = None
        for mi in cl.members:
            row = conv_rows[mi]
            cand = (row[2], row[0])  # (iterations, grid index): ties -> lower index
            if best is None or cand < best:
                best = cand
        chosen_raw.append((best[1], best[0], ci))
    chosen_raw.sort()

    # -- pass 2: replay the winners with counters --------------------
    # keyed by cluster index so chosen_starts[i] pairs with the i-th
    # cluster (and hence found_roots[i]) in the final report
    chosen_by_cluster: dict[int, ChosenStart] = {}
    merged_counts = [0] * (4 * _kernels.K_SIZE)
    merged_mind = [math.inf] * (4 * _kernels.K_SIZE)
    regime_totals = [0, 0, 0, 0]
    traces: dict[int, OrbitTrace] = {}
    for gi, iters, ci in chosen_raw:
        tr = run_orbit(
            p,
            grid.points[gi],
            epsilon,
            max_iter,
            eta=eta,
            record="full" if collect_traces else "counters",
            jitter_seed=derive_seed(seed, gi),
            trace_cap=trace_cap,
        )
        if tr.outcome is not Outcome.CONVERGED or tr.iterations != iters:
            raise RuntimeError(
                f"replay of grid point {gi} disagreed with the bulk pass "
                f"({tr.outcome}, {tr.iterations} vs converged, {iters}); "
                "kernel determinism is broken"
            )
        for b in range(4 * _kernels.K_SIZE):
            merged_counts[b] += tr.counts[b]
            if tr.min_disp[b] < merged_mind[b]:
                merged_mind[b] = tr.min_disp[b]
        for r in range(4):
            regime_totals[r] += tr.regime_steps[r]
        chosen_by_cluster[ci] = ChosenStart(
            grid_index=gi,
            iterations=iters,
            start_modulus=abs(grid.points[gi]),
            first_near_iter=tr.first_near_iter,
            near_phase_len=tr.near_phase_len,
            regime_steps=tr.regime_steps,
        )
        if collect_traces:
            traces[gi] = tr
    chosen_starts = [chosen_by_cluster[ci] for ci in range(len(clusters))]

    # -- match clusters against true roots ---------------------------
    tol = MATCH_TOLERANCE_FACTOR * epsilon
    matched: dict[int, int] = {}  # cluster idx -> root idx
    resolved: set[int] = set()
    for ci, cl in enumerate(clusters):
        best_j = None
        best_d2 = math.inf
        for j, a in enumerate(p.roots):
            dx = cl.center.real - a.real
            dy = cl.center.imag - a.imag
            d2 = dx * dx + dy * dy
            if d2 < best_d2:
                best_d2 = d2
                best_j = j
        if best_j is not None and best_d2 <= tol * tol:
            matched[ci] = best_j
            resolved.add(best_j)
    unresolved = d - len(resolved)

    found_roots = []
    for ci, cl in enumerate(clusters):
        found_roots.append(
            FoundRoot(
                center=cl.center,
                radius=cluster_radius,
                n_orbits=len(cl.members),
                width=cl.width,
                ambiguous=cl.ambiguous,
                matched_root_index=matched.get(ci),
            )
        )

    return RootFindingReport(
        polynomial_id=p.content_id(),
        degree=d,
        epsilon=epsilon,
        eta=eta,
        backend=_kernels.BACKEND,
        cluster_radius=cluster_radius,
        found_roots=found_roots,
        chosen_starts=chosen_starts,
        total_iterations_chosen=sum(c.iterations for c in chosen_starts),
        regime_totals={
            "far": regime_totals[0],
            "intermediate": regime_totals[1],
            "near": regime_totals[2],
            "outside": regime_totals[3],
        },
        unresolved_count=unresolved,
        orbit_outcomes=outcome_counts,
        outside_violations_total=outside_violations_total,
        outside_min_disp=outside_min,
        n_grid_points=n_pts,
        skipped_orbits=skipped,
        chosen_counts=merged_counts,
        chosen_min_disp=merged_mind,
        traces=traces if collect_traces else None,
    )


def _solve_coeffs(
    p: Polynomial,
    grid: StartingGrid,
    epsilon: float,
    *,
    eta: float,
    max_iter: int,
    seed: int,
    cluster_radius: float,
    collect_traces: bool,
    trace_cap: int,
) -> RootFindingReport:
    """Coefficient-only pipeline: small-step convergence, no shells."""
    d = p.degree
    results = []
    outcome_counts = {"converged": 0, "diverged": 0, "stalled": 0, "critical": 0}
    outside_violations_total = 0
    outside_min = math.inf
    for gi, z0 in enumerate(grid.points):
        tr = run_orbit(
            p,
            z0,
            epsilon,
            max_iter,
            eta=eta,
            record="full" if collect_traces else "summary",
            jitter_seed=derive_seed(seed, gi),
            trace_cap=trace_cap,
        )
        results.append((gi, tr))
        key = {
            Outcome.CONVERGED: "converged",
            Outcome.DIVERGED: "diverged",
            Outcome.STALLED: "stalled",
            Outcome.CRITICAL_FAILURE: "critical",
        }[tr.outcome]
        outcome_counts[key] += 1
        outside_min = min(outside_min, tr.outside_min_disp)
        outside_violations_total += tr.outside_violations

    conv = [(gi, tr) for gi, tr in results if tr.outcome is Outcome.CONVERGED]
    terminals = [tr.final_z for _, tr in conv]
    clusters = cluster_roots(terminals, cluster_radius)

    chosen_by_cluster: dict[int, ChosenStart] = {}
    regime_totals = [0, 0, 0, 0]
    traces: dict[int, OrbitTrace] = {}
    chosen_raw = []
    for ci, cl in enumerate(clusters):
        best = None
        for mi in cl.members:
            gi, tr = conv[mi]
            cand = (tr.iterations, gi)
            if best is None or cand < best:
                best = cand
        chosen_raw.append((best[1], best[0], ci))
    by_index = dict(results)
    for gi, iters, ci in chosen_raw:
        tr = by_index[gi]
        for r in range(4):
            regime_totals[r] += tr.regime_steps[r]
        chosen_by_cluster[ci] = ChosenStart(
            grid_index=gi,
            iterations=iters,
            start_modulus=abs(grid.points[gi]),
            first_near_iter=-1,
            near_phase_len=0,
            regime_steps=tr.regime_steps,
        )
        if collect_traces:
            traces[gi] = tr
    chosen_starts = [chosen_by_cluster[ci] for ci in range(len(clusters))]

    found_roots = [
        FoundRoot(
            center=cl.center,
            radius=cluster_radius,
            n_orbits=len(cl.members),
            width=cl.width,
            ambiguous=cl.ambiguous,
            matched_root_index=None,
        )
        for cl in clusters
    ]

    return RootFindingReport(
        polynomial_id=p.content_id(),
        degree=d,
        epsilon=epsilon,
        eta=eta,
        backend="python-coeffs",
        cluster_radius=cluster_radius,
        found_roots=found_roots,
        chosen_starts=chosen_starts,
        total_iterations_chosen=sum(c.iterations for c in chosen_starts),
        regime_totals={
            "far": regime_totals[0],
            "intermediate": regime_totals[1],
            "near": regime_totals[2],
            "outside": regime_totals[3],
        },
        unresolved_count=max(0, d - len(clusters)),
        orbit_outcomes=outcome_counts,
        outside_violations_total=outside_violations_total,
        outside_min_disp=outside_min,
        n_grid_points=len(grid.points),
        skipped_orbits=0,
        traces=traces if collect_traces else None,
    )
