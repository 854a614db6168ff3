"""Newton orbits with shell classification and regime tagging.

A point's shell index k is fixed by min_j |z - alpha_j| lying in the
dyadic interval (2^-(k+1), 2^-k]; the regime follows from k alone:

    Far           2^-k >= 1/d
    Near          2^-k <  1/(8 d^(2+eta))
    Intermediate  otherwise
    Outside2Disk  |z| > 2, overriding the above

The heavy lifting happens in a kernel (compiled when available, pure
Python otherwise); this module turns kernel tuples into OrbitTrace
values, handles the roots-unknown path, and hosts the threshold and
budget formulas.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field
from enum import Enum
from typing import Optional, Sequence

from . import _kernels
from ._kernels import K_MAX, K_MIN, K_SIZE
from .errors import CriticalPointError, EvaluationOverflow, NotClassifiable
from .grid import r_central_bound
from .poly import Polynomial
from .seeding import MASK64, SplitMix64

DEFAULT_ETA = 0.25
DEFAULT_TRACE_CAP = 1_000_000

# Divergence cutoff = 4x the containment radius: factor 4 absorbs the
# float noise of orbits that skirt the theoretical bound.
DIVERGENCE_FACTOR = 4.0


class Regime(Enum):
    FAR = 0
    INTERMEDIATE = 1
    NEAR = 2
    OUTSIDE2DISK = 3

    @property
    def label(self) -> str:
        return {
            Regime.FAR: "Far",
            Regime.INTERMEDIATE: "Intermediate",
            Regime.NEAR: "Near",
            Regime.OUTSIDE2DISK: "Outside2Disk",
        }[self]


class Outcome(Enum):
    CONVERGED = 0
    DIVERGED = 1
    STALLED = 2
    CRITICAL_FAILURE = 3


@dataclass(frozen=True)
class OrbitStep:
    z: complex
    k_index: Optional[int]
    regime: Optional[Regime]
    displacement: Optional[float]  # None on the terminal entry


@dataclass
class OrbitTrace:
    start: complex
    outcome: Outcome
    iterations: int
    final_z: complex
    final_min_dist: float
    root_index: Optional[int]
    eta: float
    steps: list[OrbitStep] = field(default_factory=list)
    first_near_iter: int = -1
    regime_steps: tuple[int, int, int, int] = (0, 0, 0, 0)
    outside_min_disp: float = math.inf
    outside_violations: int = 0
    jitter_count: int = 0
    counts: Optional[list[int]] = None  # flat (regime, k) bins
    min_disp: Optional[list[float]] = None
    backend: str = _kernels.BACKEND

    @property
    def near_phase_len(self) -> int:
        """Steps taken from the first Near-regime point onward."""
        if self.first_near_iter < 0:
            return 0
        return self.iterations - self.first_near_iter

    @property
    def far_steps(self) -> int:
        return self.regime_steps[0]

    @property
    def intermediate_steps(self) -> int:
        return self.regime_steps[1]

    @property
    def near_steps(self) -> int:
        return self.regime_steps[2]

    @property
    def outside_steps(self) -> int:
        return self.regime_steps[3]


def classify_sk(z: complex, roots: Sequence[complex]) -> int:
    """Shell index k with min_j |z - alpha_j| in (2^-(k+1), 2^-k].

    Exact: frexp decomposes the distance as mant * 2^e with mant in
    [0.5, 1), so the half-open dyadic interval test never suffers a
    log-rounding misclassification at the boundaries.
    """
    if not roots:
        raise ValueError("classify_sk needs at least one root")
    zr, zi = z.real, z.imag
    min_q2 = math.inf
    for a in roots:
        dx = zr - a.real
        dy = zi - a.imag
        q2 = dx * dx + dy * dy
        if q2 < min_q2:
            min_q2 = q2
    dist = math.sqrt(min_q2)
    if dist == 0.0:
        raise NotClassifiable(f"{z!r} coincides with a root")
    mant, e = math.frexp(dist)
    return 1 - e if mant == 0.5 else -e


def near_case_threshold(d: int, eta: float) -> float:
    """Distance below which a point counts as Near: 1/(8 d^(2+eta))."""
    if d < 2:
        raise ValueError(f"need d >= 2, got {d}")
    if not (eta > 0.0):
        raise ValueError(f"need eta > 0, got {eta}")
    return 1.0 / (8.0 * d ** (2.0 + eta))


def far_k_threshold(d: int) -> int:
    """Largest k still Far, i.e. with 2^-k >= 1/d (exact in integers)."""
    if d < 1:
        raise ValueError(f"need d >= 1, got {d}")
    return d.bit_length() - 1


def near_k_threshold(d: int, eta: float) -> int:
    """Smallest k that is Near, i.e. with 2^-k < 1/(8 d^(2+eta))."""
    threshold = near_case_threshold(d, eta)
    k = 0
    while not (math.ldexp(1.0, -k) < threshold):
        k += 1
    return k


def regime_of_k(k: int, d: int, eta: float = DEFAULT_ETA) -> Regime:
    """Far/Intermediate/Near from the shell index alone (|z| <= 2)."""
    if k <= far_k_threshold(d):
        return Regime.FAR
    if k >= near_k_threshold(d, eta):
        return Regime.NEAR
    return Regime.INTERMEDIATE


def quadratic_phase_budget(epsilon: float) -> int:
    """ceil(log2 |log2 eps - 5|): iterations that suffice once Near."""
    if not (0.0 < epsilon < 1.0):
        raise ValueError(f"epsilon must lie in (0, 1), got {epsilon!r}")
    return math.ceil(math.log2(abs(math.log2(epsilon) - 5.0)))


def displacement_lower_bound(
    d: int, K: int, C_d: float, z_outside_2disk: bool
) -> float:
    """Per-step displacement floor.

    Outside the 2-disk the floor is exactly 1/d; inside, for shell K,
    it is 1/((1 + 2 C_d) 2^(K+1) + 16 pi C_d d).
    """
    if z_outside_2disk:
        return 1.0 / d
    if K < -2:
        raise ValueError(f"inside the 2-disk the bound needs K >= -2, got {K}")
    if not (C_d > 0.0):
        raise ValueError(f"need C_d > 0, got {C_d!r}")
    return 1.0 / ((1.0 + 2.0 * C_d) * 2.0 ** (K + 1) + 16.0 * math.pi * C_d * d)


def default_max_iter(d: int, epsilon: float) -> int:
    """ceil(10 d^2 ln^4 d) + d * quadratic_phase_budget(epsilon)."""
    log4 = math.log(max(d, 2)) ** 4
    return math.ceil(10.0 * d * d * log4) + d * quadratic_phase_budget(epsilon)


def _check_run_args(epsilon: float, max_iter: int) -> None:
    if not (0.0 < epsilon <= 1e-2):
        raise ValueError(f"epsilon must lie in (0, 1e-2], got {epsilon!r}")
    if max_iter < 1:
        raise ValueError(f"max_iter must be >= 1, got {max_iter!r}")


def run_orbit(
    p: Polynomial,
    z0: complex,
    epsilon: float,
    max_iter: Optional[int] = None,
    *,
    eta: float = DEFAULT_ETA,
    record: str = "full",
    jitter_seed: int = 0,
    max_jitters: int = 1,
    trace_cap: int = DEFAULT_TRACE_CAP,
    kernel=None,
) -> OrbitTrace:
    """Iterate the Newton map from z0 until a stopping rule fires.

    Stopping: min-distance to a known root < epsilon (Converged);
    with only coefficients, |z_{n+1} - z_n| < epsilon (1 + |z_n|) for
    3 consecutive steps (Converged at the final point); |z| beyond
    4 r_central_bound(d) or non-finite (Diverged); max_iter reached
    (Stalled); a second vanishing-derivative hit (CriticalFailure).

    record: "full" stores steps (up to trace_cap) plus counters,
    "counters" drops the steps, "summary" drops the counters too.
    """
    if max_iter is None:
        max_iter = default_max_iter(p.degree, epsilon)
    _check_run_args(epsilon, max_iter)
    if record not in ("full", "counters", "summary"):
        raise ValueError(f"unknown record mode {record!r}")
    z0 = complex(z0)
    if p.roots is None:
        return _run_orbit_coeffs(
            p, z0, epsilon, max_iter, eta=eta, record=record,
            jitter_seed=jitter_seed, max_jitters=max_jitters,
            trace_cap=trace_cap,
        )

    d = p.degree
    mode = {"summary": 0, "counters": 1, "full": 2}[record]
    div_radius = DIVERGENCE_FACTOR * r_central_bound(max(d, 2))
    fn = kernel if kernel is not None else _kernels.run_orbit_kernel
    (
        outcome_code,
        iterations,
        fzr,
        fzi,
        root_index,
        min_dist,
        first_near,
        rs0,
        rs1,
        rs2,
        rs3,
        outside_min_disp,
        outside_violations,
        jitter_count,
        counts,
        min_disp,
        raw_trace,
    ) = fn(
        z0.real,
        z0.imag,
        [a.real for a in p.roots],
        [a.imag for a in p.roots],
        epsilon,
        max_iter,
        div_radius,
        far_k_threshold(d),
        near_k_threshold(d, eta),
        mode,
        jitter_seed & 0xFFFFFFFFFFFFFFFF,
        max_jitters,
        trace_cap,
    )

    steps = []
    if raw_trace is not None:
        for n, zr, zi, kc, regime_code, disp in raw_trace:
            steps.append(
                OrbitStep(
                    z=complex(zr, zi),
                    k_index=kc,
                    regime=Regime(regime_code),
                    displacement=None if math.isnan(disp) else disp,
                )
            )
    return OrbitTrace(
        start=z0,
        outcome=Outcome(outcome_code),
        iterations=iterations,
        final_z=complex(fzr, fzi),
        final_min_dist=min_dist,
        root_index=root_index if outcome_code == Outcome.CONVERGED.value else None,
        eta=eta,
        steps=steps,
        first_near_iter=first_near,
        regime_steps=(rs0, rs1, rs2, rs3),
        outside_min_disp=outside_min_disp,
        outside_violations=outside_violations,
        jitter_count=jitter_count,
        counts=counts,
        min_disp=min_disp,
        backend="custom" if kernel is not None else _kernels.BACKEND,
    )


def _run_orbit_coeffs(
    p: Polynomial,
    z0: complex,
    epsilon: float,
    max_iter: int,
    *,
    eta: float,
    record: str,
    jitter_seed: int,
    max_jitters: int,
    trace_cap: int,
) -> OrbitTrace:
    """Roots-unknown path: pure Python, 3-small-steps convergence rule.

    No shell index exists without roots, so k_index is None and the
    only regime tag available is Outside2Disk.
    """
    div_radius = DIVERGENCE_FACTOR * r_central_bound(max(p.degree, 2))
    div2 = div_radius * div_radius
    inv_d = 1.0 / p.degree
    steps: list[OrbitStep] = []
    regime_steps = [0, 0, 0, 0]
    outside_min_disp = math.inf
    outside_violations = 0
    jitter_count = 0
    jitter_rng = SplitMix64(jitter_seed & MASK64)
    small_streak = 0
    z = z0
    n = 0
    outcome = Outcome.STALLED

    def terminal_regime(w: complex) -> Optional[Regime]:
        return Regime.OUTSIDE2DISK if w.real * w.real + w.imag * w.imag > 4.0 else None

    while True:
        if not (math.isfinite(z.real) and math.isfinite(z.imag)):
            outcome = Outcome.DIVERGED
            break
        m2 = z.real * z.real + z.imag * z.imag
        if small_streak >= 3:
            outcome = Outcome.CONVERGED
            break
        if m2 > div2:
            outcome = Outcome.DIVERGED
            break
        if n >= max_iter:
            outcome = Outcome.STALLED
            break
        try:
            nz = p.newton_step(z)
        except CriticalPointError:
            if jitter_count >= max_jitters:
                outcome = Outcome.CRITICAL_FAILURE
                break
            jitter_count += 1
            theta = 2.0 * math.pi * jitter_rng.next_float()
            mag = 1e-12 * (1.0 + math.sqrt(m2))
            z = complex(z.real + mag * math.cos(theta), z.imag + mag * math.sin(theta))
            continue
        except EvaluationOverflow:
            outcome = Outcome.DIVERGED
            break
        if nz == z:
            # exact root hit: the step is the identity by convention
            outcome = Outcome.CONVERGED
            break
        disp = abs(nz - z)
        regime = terminal_regime(z)
        if regime is Regime.OUTSIDE2DISK:
            regime_steps[3] += 1
            if disp < outside_min_disp:
                outside_min_disp = disp
            if disp <= inv_d:
                outside_violations += 1
        if record == "full" and len(steps) < trace_cap:
            steps.append(OrbitStep(z=z, k_index=None, regime=regime, displacement=disp))
        small_streak = small_streak + 1 if disp < epsilon * (1.0 + abs(z)) else 0
        z = nz
        n += 1

    if record == "full" and math.isfinite(z.real) and math.isfinite(z.imag):
        steps.append(
            OrbitStep(z=z, k_index=None, regime=terminal_regime(z), displacement=None)
        )
    return OrbitTrace(
        start=z0,
        outcome=outcome,
        iterations=n,
        final_z=z,
        final_min_dist=math.nan,
        root_index=None,
        eta=eta,
        steps=steps,
        regime_steps=tuple(regime_steps),
        outside_min_disp=outside_min_disp,
        outside_violations=outside_violations,
        jitter_count=jitter_count,
        backend="python-coeffs",
    )


def write_trace_jsonl(trace: OrbitTrace, fh) -> None:
    """One JSON object per step: {n, re, im, k, regime, disp}."""
    last = len(trace.steps) - 1
    for i, step in enumerate(trace.steps):
        # stored steps are consecutive from 0; the terminal entry keeps
        # its true index even when the stored prefix was capped
        n = trace.iterations if (i == last and step.displacement is None) else i
        rec = {
            "n": n,
            "re": step.z.real,
            "im": step.z.imag,
            "k": step.k_index,
            "regime": step.regime.label if step.regime is not None else None,
            "disp": step.displacement,
        }
        fh.write(json.dumps(rec) + "\n")
