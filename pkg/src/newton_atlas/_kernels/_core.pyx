# cython: language_level=3, boundscheck=False, wraparound=False, cdivision=True
"""Compiled orbit kernel: line-for-line port of fallback.py.

Bit-for-bit parity with the pure-Python kernel is a hard requirement
(tests enforce it on thousands of orbits).  That is why every complex
operation is spelled out on (re, im) double pairs in the same order as
the fallback, why the extension is compiled with -ffp-contract=off
(no fused multiply-add: it would change roundings), and why the jitter
stream re-implements splitmix64 instead of calling back into Python.
Keep the two files in sync statement by statement.
"""

import numpy as np

from libc.math cimport INFINITY, NAN, cos, frexp, isfinite, sin, sqrt

from . import fallback as _fb

# Mirrored constants; test_kernels asserts these match the fallback.
cdef int K_MIN = _fb.K_MIN
cdef int K_MAX = _fb.K_MAX
cdef int K_SIZE = _fb.K_SIZE

cdef int OUTCOME_CONVERGED = _fb.OUTCOME_CONVERGED
cdef int OUTCOME_DIVERGED = _fb.OUTCOME_DIVERGED
cdef int OUTCOME_STALLED = _fb.OUTCOME_STALLED
cdef int OUTCOME_CRITICAL = _fb.OUTCOME_CRITICAL

cdef int REGIME_FAR = _fb.REGIME_FAR
cdef int REGIME_INTERMEDIATE = _fb.REGIME_INTERMEDIATE
cdef int REGIME_NEAR = _fb.REGIME_NEAR
cdef int REGIME_OUTSIDE = _fb.REGIME_OUTSIDE

cdef double TWO_M53 = 1.0 / 9007199254740992.0  # 2^-53, exact
cdef double TWO_PI = 2.0 * 3.141592653589793  # matches Python math.pi
cdef double JITTER_SCALE = 1e-12

cdef unsigned long long GAMMA = 0x9E3779B97F4A7C15ULL
cdef unsigned long long MIX1 = 0xBF58476D1CE4E5B9ULL
cdef unsigned long long MIX2 = 0x94D049BB133111EBULL


cdef inline unsigned long long _mix64(unsigned long long z) noexcept:
    z = (z ^ (z >> 30)) * MIX1
    z = (z ^ (z >> 27)) * MIX2
    return z ^ (z >> 31)


cdef inline int _clamp_k(long long k) noexcept:
    if k < K_MIN:
        return K_MIN
    if k > K_MAX:
        return K_MAX
    return <int> k


def run_orbit_kernel(
    double zr,
    double zi,
    roots_re,
    roots_im,
    double eps,
    long long max_iter,
    double div_radius,
    long long far_k_max,
    long long near_k_min,
    int mode,
    unsigned long long jitter_seed,
    int max_jitters=1,
    long long trace_cap=1_000_000,
):
    """See fallback.run_orbit_kernel; identical contract and results."""
    cdef double[::1] rre = np.ascontiguousarray(roots_re, dtype=np.float64)
    cdef double[::1] rim = np.ascontiguousarray(roots_im, dtype=np.float64)
    cdef Py_ssize_t d = rre.shape[0]
    cdef double div2 = div_radius * div_radius
    cdef double inv_d = 1.0 / d

    cdef long long[::1] counts = None
    cdef double[::1] mind = None
    counts_arr = None
    mind_arr = None
    if mode >= 1:
        counts_arr = np.zeros(4 * K_SIZE, dtype=np.int64)
        mind_arr = np.full(4 * K_SIZE, np.inf, dtype=np.float64)
        counts = counts_arr
        mind = mind_arr
    trace = [] if mode >= 2 else None

    cdef long long regime_steps[4]
    regime_steps[0] = 0
    regime_steps[1] = 0
    regime_steps[2] = 0
    regime_steps[3] = 0
    cdef long long first_near = -1
    cdef double outside_min_disp = INFINITY
    cdef long long outside_violations = 0
    cdef int jitter_count = 0
    cdef unsigned long long jitter_state = jitter_seed

    cdef long long n = 0
    cdef int outcome = OUTCOME_STALLED
    cdef Py_ssize_t min_idx = -1
    cdef double min_dist = INFINITY

    cdef Py_ssize_t j
    cdef double min_q2, sr, si, dx, dy, q2, inv, mant_d, m2
    cdef double q_s, ddx, ddy, nzr, nzi, disp, theta, mag
    cdef int e
    cdef long long k
    cdef int regime, kc
    cdef Py_ssize_t idx

    while True:
        if not (isfinite(zr) and isfinite(zi)):
            outcome = OUTCOME_DIVERGED
            min_idx = -1
            min_dist = NAN
            break

        min_q2 = INFINITY
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
                continue
            inv = 1.0 / q2
            sr += dx * inv
            si -= dy * inv
        min_dist = sqrt(min_q2)

        if min_dist == 0.0:
            k = K_MAX
        else:
            mant_d = frexp(min_dist, &e)
            k = 1 - e if mant_d == 0.5 else -e
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
            if jitter_count >= max_jitters:
                outcome = OUTCOME_CRITICAL
                break
            jitter_count += 1
            jitter_state = jitter_state + GAMMA
            theta = TWO_PI * ((<double> (_mix64(jitter_state) >> 11)) * TWO_M53)
            mag = JITTER_SCALE * (1.0 + sqrt(m2))
            zr = zr + mag * cos(theta)
            zi = zi + mag * sin(theta)
            continue

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

    if mode >= 2 and isfinite(zr) and isfinite(zi):
        if min_dist == 0.0:
            k = K_MAX
        elif not isfinite(min_dist):
            k = K_MIN
        else:
            mant_d = frexp(min_dist, &e)
            k = 1 - e if mant_d == 0.5 else -e
        m2 = zr * zr + zi * zi
        if m2 > 4.0:
            regime = REGIME_OUTSIDE
        elif k <= far_k_max:
            regime = REGIME_FAR
        elif k >= near_k_min:
            regime = REGIME_NEAR
        else:
            regime = REGIME_INTERMEDIATE
        trace.append((n, zr, zi, _clamp_k(k), regime, NAN))

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
        counts_arr.tolist() if counts_arr is not None else None,
        mind_arr.tolist() if mind_arr is not None else None,
        trace,
    )
