"""Universal starting grids.

For degree d the grid has s = ceil(0.4 ln d) circles with
m = ceil(8.33 d ln d) equidistant points each, on radii

    r_k = (1 + sqrt(2)) * ((d-1)/d)^((2k-1)/(4s)),   k = 1..s,

all strictly between 1 and 1+sqrt(2), so every point starts outside
the closed unit disk that contains the roots.  Natural log throughout:
the 3.33 d log^2 d total-count law singles that base out, and the
log_base knob exists purely for sensitivity experiments (it rescales
s and m, nothing else).

Ceilings are taken raw (no epsilon nudging): reproducibility across
platforms beats prettier boundary behavior.
"""

from __future__ import annotations

import csv
import json
import math
from dataclasses import dataclass
from typing import Optional, Sequence

from .errors import InvalidDegree
from .seeding import SplitMix64

RADIUS_BASE = 1.0 + math.sqrt(2.0)
CIRCLES_FACTOR = 0.4
POINTS_FACTOR = 8.33

# phase_seed 0 selects deterministic golden-angle offsets instead of
# seeded pseudo-random ones.
GOLDEN_PHASE_SEED = 0
_GOLDEN = (math.sqrt(5.0) - 1.0) / 2.0

TWO_PI = 2.0 * math.pi


def _check_degree(d: int) -> None:
    if not isinstance(d, int) or d < 2:
        raise InvalidDegree(f"grid construction needs an integer degree >= 2, got {d!r}")


def grid_counts(d: int, log_base: float = math.e) -> tuple[int, int]:
    """(number of circles s, points per circle m) without building points."""
    _check_degree(d)
    if not (log_base > 1.0):
        raise ValueError(f"log_base must exceed 1, got {log_base!r}")
    log_d = math.log(d) / math.log(log_base)
    s = math.ceil(CIRCLES_FACTOR * log_d)
    m = math.ceil(POINTS_FACTOR * d * log_d)
    return s, m


def grid_radii(d: int, s: int) -> tuple[float, ...]:
    """r_k = (1+sqrt 2) ((d-1)/d)^((2k-1)/(4s)) for k = 1..s."""
    ratio = (d - 1) / d
    return tuple(
        RADIUS_BASE * ratio ** ((2 * k - 1) / (4 * s)) for k in range(1, s + 1)
    )


def r_central_bound(d: int) -> float:
    """Radius bound for orbits of good starting points:

        5 * (d/(d-1))^ceil(5 pi (ln d + 1)).

    Decreasing in d past its small-d hump; the orbit engine uses 4x
    this as its divergence cutoff.
    """
    _check_degree(d)
    exponent = math.ceil(5.0 * math.pi * (math.log(d) + 1.0))
    return 5.0 * (d / (d - 1)) ** exponent


@dataclass(frozen=True)
class StartingGrid:
    degree: int
    num_circles: int
    points_per_circle: int
    radii: tuple[float, ...]
    phases: tuple[float, ...]
    points: tuple[complex, ...]
    phase_seed: int = 1
    log_base: float = math.e

    def circle_of(self, index: int) -> int:
        """1-based circle number of a flat point index."""
        return index // self.points_per_circle + 1

    def index_on_circle(self, index: int) -> int:
        return index % self.points_per_circle

    def to_json_dict(self) -> dict:
        return {
            "degree": self.degree,
            "radii": list(self.radii),
            "phases": list(self.phases),
            "points": [[p.real, p.imag] for p in self.points],
        }

    def save_json(self, path, preamble: dict | None = None) -> None:
        """Write the grid as JSON; preamble entries go in front of the
        grid fields (callers put file metadata there)."""
        payload = dict(preamble) if preamble else {}
        payload.update(self.to_json_dict())
        with open(path, "w", encoding="utf-8") as fh:
            json.dump(payload, fh)
            fh.write("\n")

    def save_csv(self, path, header_lines: Sequence[str] = ()) -> None:
        with open(path, "w", encoding="utf-8", newline="") as fh:
            for line in header_lines:
                fh.write(f"# {line}\n")
            writer = csv.writer(fh)
            writer.writerow(["circle", "index", "re", "im"])
            for i, p in enumerate(self.points):
                writer.writerow(
                    [self.circle_of(i), self.index_on_circle(i), repr(p.real), repr(p.imag)]
                )

    @classmethod
    def from_json_dict(cls, data: dict) -> "StartingGrid":
        try:
            degree = data["degree"]
            radii = tuple(float(r) for r in data["radii"])
            phases = tuple(float(p) for p in data["phases"])
            points = tuple(complex(p[0], p[1]) for p in data["points"])
        except (KeyError, TypeError, IndexError, ValueError) as e:
            raise InvalidDegree(f"malformed grid data: {e!r}") from e
        s = len(radii)
        if s == 0 or len(points) % s != 0:
            raise InvalidDegree("malformed grid data: point count not a multiple of circles")
        return cls(
            degree=degree,
            num_circles=s,
            points_per_circle=len(points) // s,
            radii=radii,
            phases=phases,
            points=points,
        )

    @classmethod
    def load_json(cls, path) -> "StartingGrid":
        with open(path, "r", encoding="utf-8") as fh:
            try:
                data = json.load(fh)
            except json.JSONDecodeError as e:
                raise InvalidDegree(
                    f"{path}: invalid JSON at line {e.lineno}, column {e.colno}: {e.msg}"
                ) from e
        if "grid" in data and isinstance(data["grid"], dict):
            data = data["grid"]
        return cls.from_json_dict(data)


def build_grid(
    d: int,
    phase_seed: int = 1,
    log_base: float = math.e,
) -> StartingGrid:
    """Construct the starting grid for degree d.

    phase_seed drives the per-circle angular offsets; the radii never
    depend on it.  Seed 0 gives golden-angle offsets (circle k shifted
    by k * 2 pi * (sqrt(5)-1)/2 / m); any other seed draws offsets
    uniformly from [0, 2 pi).
    """
    s, m = grid_counts(d, log_base)
    radii = grid_radii(d, s)

    if phase_seed == GOLDEN_PHASE_SEED:
        phases = tuple((k * TWO_PI * _GOLDEN / m) % TWO_PI for k in range(1, s + 1))
    else:
        rng = SplitMix64(phase_seed)
        phases = tuple(rng.next_float() * TWO_PI for _ in range(s))

    points = []
    for k in range(s):
        r = radii[k]
        base = phases[k]
        for i in range(m):
            theta = base + TWO_PI * i / m
            points.append(complex(r * math.cos(theta), r * math.sin(theta)))

    return StartingGrid(
        degree=d,
        num_circles=s,
        points_per_circle=m,
        radii=radii,
        phases=phases,
        points=tuple(points),
        phase_seed=phase_seed,
        log_base=log_base,
    )
