"""Random root ensembles and the probabilistic conditions on them.

Roots are drawn i.i.d. uniform on the unit disk (radius = sqrt(u),
uniform angle: exact and rejection-free, so every seed consumes the
same number of draws).  The uniform i.i.d. model also covers the
unordered-roots point of view: forgetting the order of an i.i.d.
sample induces exactly the uniform measure on root multisets, so one
sampler serves both and the multiset-side combinatorics are verified
by exact counting instead of sampling.

Three conditions are checked per ensemble:

  DC   min pairwise root distance >= d^-(1+eta)
  AC   no certificate cell holds more roots than its budget allows
  digit lemma   max digit multiplicity of a uniform base-d string
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Optional, Sequence

from .errors import OutOfValidityRange
from .seeding import SplitMix64, derive_seed

TWO_PI = 2.0 * math.pi


# -- sampling ---------------------------------------------------------


def sample_roots(d: int, seed: int) -> list[complex]:
    """d i.i.d. uniform points of the closed unit disk."""
    if d < 1:
        raise ValueError(f"need d >= 1, got {d}")
    rng = SplitMix64(seed)
    out = []
    for _ in range(d):
        r = math.sqrt(rng.next_float())
        theta = TWO_PI * rng.next_float()
        out.append(complex(r * math.cos(theta), r * math.sin(theta)))
    return out


# -- distance condition -----------------------------------------------


def brute_min_distance(roots: Sequence[complex]) -> float:
    """O(d^2) exact minimum pairwise distance."""
    n = len(roots)
    if n < 2:
        raise ValueError("need at least two roots")
    best = math.inf
    for i in range(n):
        zi = roots[i]
        for j in range(i + 1, n):
            zj = roots[j]
            dx = zi.real - zj.real
            dy = zi.imag - zj.imag
            q2 = dx * dx + dy * dy
            if q2 < best:
                best = q2
    return math.sqrt(best)


def min_pairwise_distance(roots: Sequence[complex]) -> float:
    """Exact minimum pairwise distance, bucketed: O(d) expected.

    Points are hashed to cells of side c and only same/adjacent cells
    are compared, which finds every pair at distance <= c.  If the
    smallest distance seen exceeds c, nothing guarantees it is the
    global minimum, so c doubles and the pass reruns; once c >= 2 (the
    diameter of the disk) adjacency covers all pairs.  Both this and
    the brute-force path minimize squared distances and take one final
    sqrt, so they agree bit for bit.
    """
    n = len(roots)
    if n < 2:
        raise ValueError("need at least two roots")
    cell = 8.0 / n
    while True:
        buckets: dict[tuple[int, int], list[int]] = {}
        keys = []
        for i, z in enumerate(roots):
            key = (math.floor(z.real / cell), math.floor(z.imag / cell))
            keys.append(key)
            buckets.setdefault(key, []).append(i)
        best = math.inf
        for i, z in enumerate(roots):
            kx, ky = keys[i]
            for bx in (kx - 1, kx, kx + 1):
                for by in (ky - 1, ky, ky + 1):
                    for j in buckets.get((bx, by), ()):
                        if j <= i:
                            continue
                        w = roots[j]
                        dx = z.real - w.real
                        dy = z.imag - w.imag
                        q2 = dx * dx + dy * dy
                        if q2 < best:
                            best = q2
        if best <= cell * cell or cell >= 2.0:
            return math.sqrt(best)
        cell *= 2.0


def dc_threshold(d: int, eta: float) -> float:
    return d ** -(1.0 + eta)


def check_dc(roots: Sequence[complex], eta: float) -> tuple[bool, float]:
    """(DC holds, exact min pairwise distance)."""
    if not (eta > 0.0):
        raise ValueError(f"need eta > 0, got {eta!r}")
    d = len(roots)
    min_pairwise = min_pairwise_distance(roots)
    return min_pairwise >= dc_threshold(d, eta), min_pairwise


def dc_probability_bound(d: int, r: float) -> float:
    """Certified lower bound exp(-d^2 r^2) for P(min pairwise >= r).

    Only proven while d r^2 < 1/2; outside that the call refuses
    rather than returning an uncertified number.
    """
    if r < 0.0:
        raise ValueError(f"need r >= 0, got {r!r}")
    if not (d * r * r < 0.5):
        raise OutOfValidityRange(
            f"the bound requires d r^2 < 1/2, got d={d}, r={r!r} "
            f"(d r^2 = {d * r * r!r})"
        )
    return max(math.exp(-(d * d) * (r * r)), 0.0)


# -- area condition ---------------------------------------------------


def partition_cell_count(d: int) -> int:
    """Smallest odd square (2k+1)^2 >= d: the number of pieces."""
    if d < 1:
        raise ValueError(f"need d >= 1, got {d}")
    k = 0
    while (2 * k + 1) ** 2 < d:
        k += 1
    return (2 * k + 1) ** 2


def partition_piece_index(z: complex, n_pieces: int) -> tuple[int, int]:
    """Equal-area piece of the unit disk containing z.

    The disk splits into a central disk of radius r0 = 1/sqrt(n_pieces)
    plus annuli between (2s-1) r0 and (2s+1) r0, the s-th cut into 8s
    equal sectors; all n_pieces pieces have area pi r0^2.  Returns
    (annulus index s, sector index), with the central disk at (0, 0).
    """
    side = math.isqrt(n_pieces)
    if side * side != n_pieces or side % 2 == 0:
        raise ValueError(f"n_pieces must be an odd square, got {n_pieces}")
    k = (side - 1) // 2
    r0 = 1.0 / side
    rho = abs(z)
    if rho <= r0:
        return (0, 0)
    s = math.ceil((rho / r0 - 1.0) / 2.0)
    s = min(max(s, 1), k)
    phi = math.atan2(z.imag, z.real) % TWO_PI
    sectors = 8 * s
    t = min(int(phi / (TWO_PI / sectors)), sectors - 1)
    return (s, t)


# Square certificate cells have side 2^j/sqrt(d) for j = 0..J with
# 2^J/sqrt(d) just covering the disk diameter; a cell of area 4^j/d
# may hold up to C_d * 4^j roots.
def square_levels(d: int) -> int:
    return math.ceil(math.log2(2.0 * math.sqrt(d)))


@dataclass(frozen=True)
class ACResult:
    ac_holds: bool
    max_count_per_cell: int  # over the equal-area partition
    fitted_cd: float  # smallest C_d that would make AC hold
    n_pieces: int
    square_max_counts: tuple[int, ...]  # per level j


def check_ac(roots: Sequence[complex], c_d: float) -> ACResult:
    """Check AC over the two finite certificate families.

    (i) the equal-area partition of the disk: every piece must hold at
    most c_d roots; (ii) axis-aligned square grids of side 2^j/sqrt(d):
    a square at level j must hold at most c_d * 4^j roots.  fitted_cd
    is the smallest constant at which both families would pass.
    """
    if not (c_d > 0.0):
        raise ValueError(f"need c_d > 0, got {c_d!r}")
    d = len(roots)
    if d < 1:
        raise ValueError("need at least one root")

    n_pieces = partition_cell_count(d)
    piece_counts: dict[tuple[int, int], int] = {}
    for z in roots:
        key = partition_piece_index(z, n_pieces)
        piece_counts[key] = piece_counts.get(key, 0) + 1
    partition_max = max(piece_counts.values())

    sqrt_d = math.sqrt(d)
    square_maxes = []
    for j in range(square_levels(d) + 1):
        side = 2.0**j / sqrt_d
        counts: dict[tuple[int, int], int] = {}
        for z in roots:
            key = (math.floor(z.real / side), math.floor(z.imag / side))
            counts[key] = counts.get(key, 0) + 1
        square_maxes.append(max(counts.values()))

    fitted = float(partition_max)
    holds = partition_max <= c_d
    for j, cnt in enumerate(square_maxes):
        scale = 4.0**j
        fitted = max(fitted, cnt / scale)
        if cnt > c_d * scale:
            holds = False

    return ACResult(
        ac_holds=holds,
        max_count_per_cell=partition_max,
        fitted_cd=fitted,
        n_pieces=n_pieces,
        square_max_counts=tuple(square_maxes),
    )


def default_ac_ceiling(d: int) -> float:
    """Pragmatic AC budget 3 ln d: a choice, not a theorem.

    The underlying claim is only that C_d grows like log d, with no
    explicit constant; 3x the natural log holds with large margin on
    Monte Carlo ensembles and is what the CLI uses by default.
    """
    return 3.0 * math.log(max(d, 2))


# -- digit lemma ------------------------------------------------------


def alpha_for_degree(d: int) -> int:
    """The alpha with (alpha-1)! < d^2 <= alpha!."""
    if d < 2:
        raise ValueError(f"need d >= 2, got {d}")
    target = d * d
    alpha = 1
    fact = 1
    while fact < target:
        alpha += 1
        fact *= alpha
    return alpha


def digit_tail_bound(d: int, alpha: Optional[int] = None) -> float:
    """P(max digit multiplicity >= alpha) <= d/alpha!."""
    if alpha is None:
        alpha = alpha_for_degree(d)
    return d / math.factorial(alpha)


def digit_multiplicity_trial(d: int, seed: int) -> int:
    """Max digit multiplicity of a seeded uniform d-digit base-d string."""
    if d < 2:
        raise ValueError(f"need d >= 2, got {d}")
    rng = SplitMix64(seed)
    counts = [0] * d
    for _ in range(d):
        digit = int(rng.next_float() * d)
        if digit >= d:  # next_float() < 1, but guard the scaling edge
            digit = d - 1
        counts[digit] += 1
    return max(counts)


def max_multiplicity(digits: Sequence[int]) -> int:
    counts: dict[int, int] = {}
    for x in digits:
        counts[x] = counts.get(x, 0) + 1
    return max(counts.values())


# -- multiset combinatorics -------------------------------------------


def multiset_count(n: int, r: int) -> int:
    """Number of size-n multisets over r symbols: C(n+r-1, r-1), exact."""
    if n < 0:
        raise ValueError(f"need n >= 0, got {n}")
    if r < 1:
        raise ValueError(f"need r >= 1, got {r}")
    return math.comb(n + r - 1, r - 1)


def multiset_tail_bound(d: int, alpha: int) -> float:
    """Unordered-model tail: d * C(2d-alpha-1, d-1) / C(2d-1, d-1)."""
    if d < 1 or alpha < 1 or alpha > d:
        raise ValueError(f"need 1 <= alpha <= d, got d={d}, alpha={alpha}")
    return d * math.comb(2 * d - alpha - 1, d - 1) / math.comb(2 * d - 1, d - 1)


def multiset_tail_bound_simplified(d: int, alpha: int) -> float:
    """Looser closed form d (1/2)^(alpha-1) d/(2d-1)."""
    return d * 0.5 ** (alpha - 1) * d / (2 * d - 1)


# -- per-trial report -------------------------------------------------


@dataclass(frozen=True)
class ConditionReport:
    ac_holds: bool
    ac_max_count_per_cell: int
    ac_constant: float
    dc_holds: bool
    dc_min_pairwise: float
    eta: float
    digit_max_mult: int
    seed: int


def verify_trial(
    d: int,
    seed: int,
    eta: float,
    c_d: Optional[float] = None,
) -> ConditionReport:
    """Sample one ensemble and run all three condition checks."""
    if c_d is None:
        c_d = default_ac_ceiling(d)
    roots = sample_roots(d, seed)
    dc_holds, dc_min = check_dc(roots, eta)
    ac = check_ac(roots, c_d)
    digit = digit_multiplicity_trial(d, derive_seed(seed, 0xD161))
    return ConditionReport(
        ac_holds=ac.ac_holds,
        ac_max_count_per_cell=ac.max_count_per_cell,
        ac_constant=ac.fitted_cd,
        dc_holds=dc_holds,
        dc_min_pairwise=dc_min,
        eta=eta,
        digit_max_mult=digit,
        seed=seed,
    )
