"""Pure-Python orbit kernel: the reference implementation.

The compiled kernel in ``_core.pyx`` is a line-for-line port of
:func:`run_orbit_kernel`.  Both do all complex arithmetic on explicit
(re, im) double pairs in the same operation order, call the same libm
entry points (sqrt, frexp, cos, sin), and derive jitter directions from
the same splitmix64 stream, so a given orbit produces bit-identical
results on either backend.  Any change here must be mirrored there.
"""

from __future__ import annotations

from math import cos, frexp, isfinite, pi, sin, sqrt

from ..seeding import MASK64, mix64

# Shell-index storage range.  True k is computed exactly via frexp and
# then clamped into [K_MIN, K_MAX] for counter bins and trace records.
K_MIN = -40
K_MAX = 80
K_SIZE = K_MAX - K_MIN + 1

# Regime codes (rows of the counter arrays).
REGIME_FAR = 0
REGIME_INTERMEDIATE = 1
REGIME_NEAR = 2
REGIME_OUTSIDE = 3

# Outcome codes.
OUTCOME_CONVERGED = 0
OUTCOME_DIVERGED = 1
OUTCOME_STALLED = 2
OUTCOME_CRITICAL = 3

_INF = float("inf")
_NAN = float("nan")
_GAMMA = 0x9E3779B97F4A7C15
_TWO_PI = 2.0 * pi
_JITTER_SCALE = 1e-12


def _clamp_k(k: int) -> int:
    if k < K_MIN:
        return K_MIN
    if k > K_MAX:
        return K_MAX
    return k


def run_orbit_kernel(
    zr: float,
    zi: float,
    roots_re,
    roots_im,
    eps: float,
    max_iter: int,
    div_radius: float,
    far_k_max: int,
    near_k_min: int,
    mode: int,
    jitter_seed: int,
    max_jitters: int = 1,
    trace_cap: int = 1_000_000,
):
    """Iterate the Newton map from (zr, zi) over the given roots.

    mode 0 records the summary only, mode 1 adds per-(regime, k)
    counters, mode 2 adds the step trace (capped at trace_cap entries;
    counters keep running beyond the cap).

    Returns a tuple:
      (outcome, iterations, final_re, final_im, nearest_root_index,
       final_min_dist, first_near_iter, regime_steps[4],
       outside_min_disp, outside_violations, jitter_count,
       counts | None, min_disp | None, trace | None)

    counts/min_disp are flat lists of length 4*K_SIZE indexed
    regime*K_SIZE + (k - K_MIN).  trace is a list of
    (n, re, im, k, regime, disp) tuples; the terminal entry carries
    disp = NaN.
    """
    rre = list(roots_re)
    rim = list(roots_im)
    d = len(rre)
    div2 = div_radius * div_radius
    inv_d = 1.0 / d

    counts = [0] * (4 * K_SIZE) if mode >= 1 else None
    mind = [_INF] * (4 * K_SIZE) if mode >= 1 else None
    trace = [] if mode >= 2 else None

    regime_steps = [0, 0, 0, 0]
    first_near = -1
    outside_min_disp = _INF
    outside_violations = 0
    jitter_count = 0
    jitter_state = jitter_seed & MASK64

    n = 0
    outcome = OUTCOME_STALLED
    min_idx = -1
    min_dist = _INF

    while True:
        if not (isfinite(zr) and isfinite(zi)):
            outcome = OUTCOME_DIVERGED
            min_idx = -1
            min_dist = _NAN
            break

        # One pass over the roots: nearest-root distance and the
        # reciprocal sum S = sum_j 1/(z - alpha_j), so that
        # N(z) = z - 1/S.
        min_q2 = _INF
        min_idx = -1
        sr = 0.0
        si = 0.0
        for j in range(d):
            dx = zr - rre[j]
            dy = zi - rim[j]
            q2 = dx * dx + dy * dy
            if q2 < min_q2:
                min_q2 = q2
                min_idx = j
            if q2 == 0.0:
                continue  # exactly on a root: no reciprocal term
            inv = 1.0 / q2
            sr += dx * inv
            si -= dy * inv
        min_dist = sqrt(min_q2)

        # Shell index from the exact dyadic interval (2^-(k+1), 2^-k]:
        # frexp(m) = (mant, e) with m = mant * 2^e, mant in [0.5, 1).
        if min_dist == 0.0:
            k = K_MAX
        else:
            mant, e = frexp(min_dist)
            k = 1 - e if mant == 0.5 else -e
        m2 = zr * zr + zi * zi
        if m2 > 4.0:
            regime = REGIME_OUTSIDE
        elif k <= far_k_max:
            regime = REGIME_FAR
        elif k >= near_k_min:
            regime = REGIME_NEAR
        else:
            regime = REGIME_INTERMEDIATE

        if min_dist < eps:
            outcome = OUTCOME_CONVERGED
            break
        if m2 > div2:
            outcome = OUTCOME_DIVERGED
            break
        if n >= max_iter:
            outcome = OUTCOME_STALLED
            break

        q_s = sr * sr + si * si
        if q_s == 0.0:
            # Derivative sum vanished (critical point, or underflow so
            # severe the step is meaningless): nudge once, then give up.
            if jitter_count >= max_jitters:
                outcome = OUTCOME_CRITICAL
                break
            jitter_count += 1
            jitter_state = (jitter_state + _GAMMA) & MASK64
            theta = _TWO_PI * ((mix64(jitter_state) >> 11) * 2.0**-53)
            mag = _JITTER_SCALE * (1.0 + sqrt(m2))
            zr = zr + mag * cos(theta)
            zi = zi + mag * sin(theta)
            continue  # reclassify the nudged point; n unchanged

        ddx = sr / q_s
        ddy = si / q_s
        nzr = zr - ddx
        nzi = zi + ddy
        disp = sqrt(ddx * ddx + ddy * ddy)

        kc = _clamp_k(k)
        regime_steps[regime] += 1
        if regime == REGIME_OUTSIDE:
            if disp < outside_min_disp:
                outside_min_disp = disp
            if disp <= inv_d:
                outside_violations += 1
        elif regime == REGIME_NEAR and first_near < 0:
            first_near = n
        if mode >= 1:
            idx = regime * K_SIZE + (kc - K_MIN)
            counts[idx] += 1
            if disp < mind[idx]:
                mind[idx] = disp
        if mode >= 2 and len(trace) < trace_cap:
            trace.append((n, zr, zi, kc, regime, disp))

        zr = nzr
        zi = nzi
        n += 1

    # Terminal point: recorded in the trace, never counted as a step.
    if mode >= 2 and isfinite(zr) and isfinite(zi):
        if min_dist == 0.0:
            k = K_MAX
        elif not isfinite(min_dist):
            k = K_MIN
        else:
            mant, e = frexp(min_dist)
            k = 1 - e if mant == 0.5 else -e
        m2 = zr * zr + zi * zi
        if m2 > 4.0:
            regime = REGIME_OUTSIDE
        elif k <= far_k_max:
            regime = REGIME_FAR
        elif k >= near_k_min:
            regime = REGIME_NEAR
        else:
            regime = REGIME_INTERMEDIATE
        trace.append((n, zr, zi, _clamp_k(k), regime, _NAN))

    return (
        outcome,
        n,
        zr,
        zi,
        min_idx,
        min_dist,
        first_near,
        regime_steps[0],
        regime_steps[1],
        regime_steps[2],
        regime_steps[3],
        outside_min_disp,
        outside_violations,
        jitter_count,
        counts,
        mind,
        trace,
    )
