"""Monic complex polynomials in coefficient and root form.

Root form is the authoritative representation when both are present:
evaluation and the Newton map on it are overflow-safe at any degree,
while coefficient arithmetic in doubles degrades beyond middling
degrees.  Coefficient expansion from roots is therefore offered only
for degree <= 64, and a polynomial carrying both forms is accepted only
in that range (where the cross-check is meaningful).
"""

from __future__ import annotations

import hashlib
import json
import math
from dataclasses import dataclass
from typing import Optional, Sequence

from .errors import (
    CriticalPointError,
    EvaluationOverflow,
    InvalidPolynomial,
)

# |root| <= 1 is required, but sampled boundary points can round a hair
# outside; this slack admits them without admitting genuinely bad data.
ROOT_MODULUS_SLACK = 1e-12

# Largest degree for which double-precision expansion of a product of
# unit-disk linear factors keeps per-coefficient relative error well
# under the 1e-8 cross-check tolerance.
MAX_EXPANSION_DEGREE = 64

COEFF_CHECK_RTOL = 1e-8

# Renormalization threshold for the scaled root-form product: pull the
# mantissa back toward 1 whenever it leaves [2^-600, 2^600].
_SCALE_EXP = 600
_SCALE_UP = math.ldexp(1.0, _SCALE_EXP)
_SCALE_DOWN = math.ldexp(1.0, -_SCALE_EXP)


def expand_roots(roots: Sequence[complex]) -> tuple[complex, ...]:
    """Coefficients (constant first, monic) of prod (z - alpha_j).

    Only reliable for len(roots) <= MAX_EXPANSION_DEGREE; the leading
    coefficient is exactly 1 by construction.
    """
    coeffs = [complex(1.0, 0.0)]
    for alpha in roots:
        nxt = [complex(0.0, 0.0)] * (len(coeffs) + 1)
        for i, c in enumerate(coeffs):
            nxt[i + 1] += c
            nxt[i] -= alpha * c
        coeffs = nxt
    return tuple(coeffs)


def _require_finite_pairs(values, label: str) -> None:
    for i, v in enumerate(values):
        if not (math.isfinite(v.real) and math.isfinite(v.imag)):
            raise InvalidPolynomial(f"{label}[{i}] is not finite: {v!r}")


@dataclass(frozen=True)
class Polynomial:
    """Monic degree-d polynomial over the complex numbers.

    At least one of coeffs (constant term first, leading term exactly
    1, length d+1) and roots (length d, all inside the closed unit
    disk) must be given.
    """

    degree: int
    coeffs: Optional[tuple[complex, ...]] = None
    roots: Optional[tuple[complex, ...]] = None

    def __post_init__(self):
        if not isinstance(self.degree, int) or self.degree < 1:
            raise InvalidPolynomial(
                f"degree must be a positive integer, got {self.degree!r}"
            )
        if self.coeffs is None and self.roots is None:
            raise InvalidPolynomial("need coeffs or roots (or both)")
        if self.coeffs is not None and not isinstance(self.coeffs, tuple):
            object.__setattr__(self, "coeffs", tuple(self.coeffs))
        if self.roots is not None and not isinstance(self.roots, tuple):
            object.__setattr__(self, "roots", tuple(self.roots))

        if self.roots is not None:
            if len(self.roots) != self.degree:
                raise InvalidPolynomial(
                    f"expected {self.degree} roots, got {len(self.roots)}"
                )
            _require_finite_pairs(self.roots, "roots")
            limit = (1.0 + ROOT_MODULUS_SLACK) ** 2
            for i, a in enumerate(self.roots):
                if a.real * a.real + a.imag * a.imag > limit:
                    raise InvalidPolynomial(
                        f"roots[{i}] = {a!r} lies outside the closed unit disk"
                    )

        if self.coeffs is not None:
            if len(self.coeffs) != self.degree + 1:
                raise InvalidPolynomial(
                    f"expected {self.degree + 1} coefficients, "
                    f"got {len(self.coeffs)}"
                )
            _require_finite_pairs(self.coeffs, "coeffs")
            if self.coeffs[-1] != 1:
                raise InvalidPolynomial(
                    f"leading coefficient must be exactly 1, "
                    f"got {self.coeffs[-1]!r}"
                )

        if self.coeffs is not None and self.roots is not None:
            if self.degree > MAX_EXPANSION_DEGREE:
                raise InvalidPolynomial(
                    "holding both forms requires degree <= "
                    f"{MAX_EXPANSION_DEGREE}: the coefficient/root "
                    "cross-check is not certifiable in doubles beyond that"
                )
            expanded = expand_roots(self.roots)
            for i, (got, want) in enumerate(zip(self.coeffs, expanded)):
                tol = COEFF_CHECK_RTOL * max(1.0, abs(want))
                if abs(got - want) > tol:
                    raise InvalidPolynomial(
                        f"coeffs[{i}] = {got!r} disagrees with the root "
                        f"expansion {want!r} beyond relative {COEFF_CHECK_RTOL}"
                    )

    # -- constructors -------------------------------------------------

    @classmethod
    def from_roots(
        cls, roots: Sequence[complex], attach_coeffs: bool = False
    ) -> "Polynomial":
        roots = tuple(complex(r) for r in roots)
        coeffs = None
        if attach_coeffs:
            if len(roots) > MAX_EXPANSION_DEGREE:
                raise InvalidPolynomial(
                    f"attach_coeffs requires degree <= {MAX_EXPANSION_DEGREE}"
                )
            coeffs = expand_roots(roots)
        return cls(degree=len(roots), coeffs=coeffs, roots=roots)

    @classmethod
    def from_coeffs(cls, coeffs: Sequence[complex]) -> "Polynomial":
        coeffs = tuple(complex(c) for c in coeffs)
        return cls(degree=len(coeffs) - 1, coeffs=coeffs, roots=None)

    # -- serialization ------------------------------------------------

    @classmethod
    def from_json_dict(cls, data: dict) -> "Polynomial":
        if not isinstance(data, dict):
            raise InvalidPolynomial("polynomial JSON must be an object")
        if "degree" not in data:
            raise InvalidPolynomial("missing field 'degree'")
        degree = data["degree"]
        if not isinstance(degree, int):
            raise InvalidPolynomial(f"'degree' must be an integer, got {degree!r}")

        def parse_pairs(field: str) -> Optional[tuple[complex, ...]]:
            if field not in data:
                return None
            raw = data[field]
            if not isinstance(raw, list):
                raise InvalidPolynomial(f"'{field}' must be a list of [re, im] pairs")
            out = []
            for i, pair in enumerate(raw):
                if (
                    not isinstance(pair, (list, tuple))
                    or len(pair) != 2
                    or not all(isinstance(x, (int, float)) for x in pair)
                ):
                    raise InvalidPolynomial(
                        f"{field}[{i}] must be a two-element [re, im] pair, "
                        f"got {pair!r}"
                    )
                out.append(complex(float(pair[0]), float(pair[1])))
            return tuple(out)

        roots = parse_pairs("roots")
        coeffs = parse_pairs("coeffs")
        if roots is None and coeffs is None:
            raise InvalidPolynomial("need at least one of 'roots', 'coeffs'")
        return cls(degree=degree, coeffs=coeffs, roots=roots)

    def to_json_dict(self) -> dict:
        out: dict = {"degree": self.degree}
        if self.roots is not None:
            out["roots"] = [[a.real, a.imag] for a in self.roots]
        if self.coeffs is not None:
            out["coeffs"] = [[c.real, c.imag] for c in self.coeffs]
        return out

    @classmethod
    def load(cls, path) -> "Polynomial":
        with open(path, "r", encoding="utf-8") as fh:
            try:
                data = json.load(fh)
            except json.JSONDecodeError as e:
                raise InvalidPolynomial(
                    f"{path}: invalid JSON at line {e.lineno}, "
                    f"column {e.colno}: {e.msg}"
                ) from e
        if isinstance(data, dict) and "polynomial" in data:
            data = data["polynomial"]
        return cls.from_json_dict(data)

    def save(self, path) -> None:
        with open(path, "w", encoding="utf-8") as fh:
            json.dump(self.to_json_dict(), fh)
            fh.write("\n")

    def content_id(self) -> str:
        """Stable short identifier derived from the stored values."""
        blob = json.dumps(self.to_json_dict(), sort_keys=True)
        return hashlib.sha256(blob.encode()).hexdigest()[:12]

    # -- core maps ----------------------------------------------------

    def evaluate(self, z: complex) -> tuple[complex, complex]:
        """(p(z), p'(z)).

        Root form: scaled product for p, reciprocal-sum identity
        p' = p * sum 1/(z - alpha_j) off roots; at an exact simple root
        p' is the product of the remaining factors.  Coefficient form:
        simultaneous Horner; raises EvaluationOverflow if that leaves
        double range.
        """
        z = complex(z)
        if not (math.isfinite(z.real) and math.isfinite(z.imag)):
            raise ValueError(f"z must be finite, got {z!r}")
        if self.roots is not None:
            return self._evaluate_roots(z)
        return self._evaluate_coeffs(z)

    def _evaluate_roots(self, z: complex) -> tuple[complex, complex]:
        pr, pi = 1.0, 0.0  # mantissa of the full product
        exp2 = 0
        cr, ci = 1.0, 0.0  # mantissa of the product over non-hit factors
        cexp2 = 0
        hits = 0
        s = 0.0 + 0.0j
        for a in self.roots:
            dx = z.real - a.real
            dy = z.imag - a.imag
            pr, pi = pr * dx - pi * dy, pr * dy + pi * dx
            m2 = pr * pr + pi * pi
            if m2 > _SCALE_UP:
                pr *= _SCALE_DOWN
                pi *= _SCALE_DOWN
                exp2 += _SCALE_EXP
            elif 0.0 < m2 < _SCALE_DOWN:
                pr *= _SCALE_UP
                pi *= _SCALE_UP
                exp2 -= _SCALE_EXP
            if dx == 0.0 and dy == 0.0:
                hits += 1
                continue
            cr, ci = cr * dx - ci * dy, cr * dy + ci * dx
            c2 = cr * cr + ci * ci
            if c2 > _SCALE_UP:
                cr *= _SCALE_DOWN
                ci *= _SCALE_DOWN
                cexp2 += _SCALE_EXP
            elif 0.0 < c2 < _SCALE_DOWN:
                cr *= _SCALE_UP
                ci *= _SCALE_UP
                cexp2 -= _SCALE_EXP
            q2 = dx * dx + dy * dy
            s += complex(dx / q2, -dy / q2)
        p = complex(math.ldexp(pr, exp2), math.ldexp(pi, exp2))
        if hits == 0:
            return p, p * s
        others = complex(math.ldexp(cr, cexp2), math.ldexp(ci, cexp2))
        if hits == 1:
            return complex(0.0, 0.0), others
        # multiple exact hits: p and p' both vanish
        return complex(0.0, 0.0), complex(0.0, 0.0)

    def _evaluate_coeffs(self, z: complex) -> tuple[complex, complex]:
        p = self.coeffs[-1]
        dp = 0.0 + 0.0j
        for c in reversed(self.coeffs[:-1]):
            dp = dp * z + p
            p = p * z + c
        if not all(
            math.isfinite(v) for v in (p.real, p.imag, dp.real, dp.imag)
        ):
            raise EvaluationOverflow(
                f"coefficient-form evaluation at z={z!r} left double range "
                "(use the root form)"
            )
        return p, dp

    def newton_step(self, z: complex) -> complex:
        """One step of N_p: z - p(z)/p'(z).

        With known roots this is z - 1/sum_j 1/(z - alpha_j), which
        never forms the (possibly huge) product.  Roots are fixed
        points: an exact hit returns z unchanged.  A vanishing
        derivative off a root raises CriticalPointError.
        """
        z = complex(z)
        if not (math.isfinite(z.real) and math.isfinite(z.imag)):
            raise ValueError(f"z must be finite, got {z!r}")
        if self.roots is not None:
            sr = 0.0
            si = 0.0
            for a in self.roots:
                dx = z.real - a.real
                dy = z.imag - a.imag
                q2 = dx * dx + dy * dy
                if q2 == 0.0:
                    return z
                inv = 1.0 / q2
                sr += dx * inv
                si -= dy * inv
            q_s = sr * sr + si * si
            if q_s == 0.0:
                raise CriticalPointError(z)
            return complex(z.real - sr / q_s, z.imag + si / q_s)
        p, dp = self._evaluate_coeffs(z)
        if p == 0:
            return z
        if dp == 0:
            raise CriticalPointError(z)
        return z - p / dp

    def farfield_linearization(self, z: complex) -> complex:
        """Affine far-field model of the Newton map.

        Far from the roots, N_p contracts toward the root centroid c by
        the factor (d-1)/d per step: N_p(z) = ((d-1)/d)(z - c) + c
        + O(1/|z|).  Written out that is ((d-1)/d) z + (sum of roots)/d^2.
        The root sum comes from -coeffs[d-1] when only coefficients are
        stored.
        """
        d = self.degree
        if self.roots is not None:
            root_sum = sum(self.roots, start=complex(0.0, 0.0))
        else:
            root_sum = -self.coeffs[d - 1]
        return ((d - 1) / d) * complex(z) + root_sum / (d * d)
