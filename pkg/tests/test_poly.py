import cmath
import json
import math
import random

import numpy as np
import pytest

from newton_atlas import (
    CriticalPointError,
    EvaluationOverflow,
    InvalidPolynomial,
    Polynomial,
    expand_roots,
)
from conftest import random_disk_points


def test_expand_roots_matches_numpy():
    rand = random.Random(11)
    for _ in range(50):
        d = rand.randint(1, 20)
        roots = random_disk_points(rand, d)
        got = expand_roots(roots)
        want = np.poly(np.array(roots))[::-1]  # numpy is highest-first
        assert len(got) == d + 1
        assert got[-1] == 1.0
        for g, w in zip(got, want):
            assert abs(g - w) <= 1e-10 * max(1.0, abs(w))


def test_evaluate_frozen_examples():
    p = Polynomial.from_coeffs([-0.25, 0.0, 1.0])
    assert p.evaluate(1.0 + 0j) == (0.75 + 0j, 2.0 + 0j)
    v, dv = p.evaluate(0.5 + 0j)
    assert v == 0 and dv == 1.0
    quartic = Polynomial.from_roots([0, 0, 0, 0])
    v, dv = quartic.evaluate(1.0 + 0j)
    assert v == 1.0 and dv == 4.0


def test_evaluate_forms_agree():
    rand = random.Random(12)
    for _ in range(100):
        d = rand.randint(2, 16)
        roots = random_disk_points(rand, d)
        p = Polynomial.from_roots(roots, attach_coeffs=True)
        pr = Polynomial.from_roots(roots)
        pc = Polynomial.from_coeffs(p.coeffs)
        z = complex(rand.uniform(-3, 3), rand.uniform(-3, 3))
        if min(abs(z - a) for a in roots) < 1e-3:
            continue
        vr, dr = pr.evaluate(z)
        vc, dc = pc.evaluate(z)
        assert abs(vr - vc) <= 1e-8 * max(1.0, abs(vr))
        assert abs(dr - dc) <= 1e-8 * max(1.0, abs(dr))


def test_evaluate_at_exact_and_double_roots():
    p = Polynomial.from_roots([0.5, -0.5])
    v, dv = p.evaluate(0.5 + 0j)
    assert v == 0 and dv == 1.0  # product over the other root
    dbl = Polynomial.from_roots([0.3, 0.3])
    v, dv = dbl.evaluate(0.3 + 0j)
    assert v == 0 and dv == 0


def test_evaluate_overflow_coeff_form():
    p = Polynomial.from_coeffs([0.0] * 20 + [1.0])
    with pytest.raises(EvaluationOverflow):
        p.evaluate(1e20 + 0j)


def test_root_form_large_degree_no_overflow():
    # 500 roots, |z| = 3: the plain product overflows 1e238, the scaled
    # accumulation must not
    roots = random_disk_points(random.Random(3), 500)
    p = Polynomial.from_roots(roots)
    step = p.newton_step(3.0 + 0j)
    assert cmath.isfinite(step)
    assert abs(step) < 3.0  # Newton pulls inward from outside the disk


def test_newton_step_frozen_examples():
    p = Polynomial.from_coeffs([-0.25, 0.0, 1.0])
    assert p.newton_step(1.0 + 0j) == 0.625 + 0j
    quartic = Polynomial.from_roots([0, 0, 0, 0])
    assert quartic.newton_step(1.0 + 0j) == 0.75 + 0j
    withroot = Polynomial.from_roots([0.5, -0.25])
    assert withroot.newton_step(0.5 + 0j) == 0.5 + 0j


def test_newton_step_critical_point():
    pr = Polynomial.from_roots([1j, -1j])
    with pytest.raises(CriticalPointError) as ei:
        pr.newton_step(0j)
    assert ei.value.z == 0j
    pc = Polynomial.from_coeffs([1.0, 0.0, 1.0])
    with pytest.raises(CriticalPointError):
        pc.newton_step(0j)


def test_newton_step_forms_agree():
    rand = random.Random(13)
    checked = 0
    while checked < 300:
        d = rand.randint(2, 20)
        roots = random_disk_points(rand, d)
        z = complex(rand.uniform(-3, 3), rand.uniform(-3, 3))
        if abs(z) > 3 or min(abs(z - a) for a in roots) < 1e-3:
            continue
        both = Polynomial.from_roots(roots, attach_coeffs=True)
        nr = Polynomial.from_roots(roots).newton_step(z)
        nc = Polynomial.from_coeffs(both.coeffs).newton_step(z)
        assert abs(nr - nc) <= 1e-8 * max(1.0, abs(nr))
        checked += 1


def test_quadratic_convergence_near_simple_roots():
    rand = random.Random(14)
    for _ in range(20):
        d = rand.randint(2, 12)
        roots = random_disk_points(rand, d)
        a = roots[0]
        if min(abs(a - b) for b in roots[1:]) < 1e-2:
            continue  # quadratic regime needs a well-separated simple root
        p = Polynomial.from_roots(roots)
        # fit C on coarse offsets, verify on finer ones
        def ratio(h):
            return abs(p.newton_step(a + h) - a) / abs(h) ** 2

        coarse = [1e-4 * cmath.exp(2j * math.pi * rand.random()) for _ in range(5)]
        fine = [1e-5 * cmath.exp(2j * math.pi * rand.random()) for _ in range(5)]
        c_fit = max(ratio(h) for h in coarse)
        if c_fit == 0.0:
            continue  # isolated root with the other roots symmetric away
        assert all(ratio(h) <= 2.0 * c_fit + 1e-9 for h in fine)


def test_farfield_frozen_examples():
    p2 = Polynomial.from_roots([0.5, -0.5])
    assert p2.farfield_linearization(1e6 + 0j) == 5e5 + 0j
    # triple root at 0.5: exact affine map is (2/3)(z - 1/2) + 1/2
    p3 = Polynomial.from_roots([0.5, 0.5, 0.5])
    got = p3.farfield_linearization(100.0 + 0j)
    assert abs(got - (200.0 / 3.0 + 1.0 / 6.0)) < 1e-12
    assert abs(p3.newton_step(100.0 + 0j) - got) < 1e-12  # exact for z^3 shape
    p4 = Polynomial.from_roots([0.5, -0.5, 0.5j, -0.5j])
    assert p4.farfield_linearization(1e3 + 0j) == 750.0 + 0j


def test_farfield_approximates_newton_far_away():
    rand = random.Random(15)
    for d in (2, 10, 50, 100):
        roots = random_disk_points(rand, d)
        p = Polynomial.from_roots(roots)
        for _ in range(5):
            z = 1e6 * cmath.exp(2j * math.pi * rand.random())
            assert abs(p.newton_step(z) - p.farfield_linearization(z)) <= 1e-3


def test_farfield_from_coeffs_uses_trace():
    roots = [0.4, -0.2 + 0.3j, 0.1j]
    both = Polynomial.from_roots(roots, attach_coeffs=True)
    pc = Polynomial.from_coeffs(both.coeffs)
    z = 50.0 + 7.0j
    want = Polynomial.from_roots(roots).farfield_linearization(z)
    assert abs(pc.farfield_linearization(z) - want) < 1e-12


# -- construction and file format -------------------------------------


def test_validation_rejects_bad_inputs():
    with pytest.raises(InvalidPolynomial):
        Polynomial(degree=2, roots=(0.1 + 0j,))  # wrong length
    with pytest.raises(InvalidPolynomial):
        Polynomial.from_roots([1.5, 0.0])  # outside the closed disk
    with pytest.raises(InvalidPolynomial):
        Polynomial.from_coeffs([1.0, 0.0, 2.0])  # leading must be exactly 1
    with pytest.raises(InvalidPolynomial):
        Polynomial.from_roots([float("nan"), 0.0])
    with pytest.raises(InvalidPolynomial):
        Polynomial(degree=0, roots=())
    with pytest.raises(InvalidPolynomial):
        Polynomial(degree=2)  # neither representation


def test_root_on_unit_circle_allowed():
    p = Polynomial.from_roots([1.0, -1.0])
    assert p.degree == 2


def test_both_forms_consistency_checked():
    roots = [0.5, -0.5]
    with pytest.raises(InvalidPolynomial):
        Polynomial(degree=2, roots=tuple(complex(r) for r in roots),
                   coeffs=(0.25 + 0j, 0j, 1 + 0j))  # sign flipped constant
    ok = Polynomial(degree=2, roots=(0.5 + 0j, -0.5 + 0j),
                    coeffs=(-0.25 + 0j, 0j, 1 + 0j))
    assert ok.coeffs is not None


def test_both_forms_rejected_above_expansion_limit():
    roots = random_disk_points(random.Random(4), 65)
    with pytest.raises(InvalidPolynomial):
        Polynomial.from_roots(roots, attach_coeffs=True)
    # root-only stays fine at any degree
    assert Polynomial.from_roots(roots).degree == 65


def test_json_roundtrip_exact(tmp_path):
    roots = random_disk_points(random.Random(5), 9)
    p = Polynomial.from_roots(roots, attach_coeffs=True)
    path = tmp_path / "p.json"
    p.save(path)
    q = Polynomial.load(path)
    assert q.roots == p.roots
    assert q.coeffs == p.coeffs
    assert q.content_id() == p.content_id()


def test_load_reports_json_position(tmp_path):
    path = tmp_path / "broken.json"
    path.write_text('{"degree": 2,\n  "roots": [[0.1, 0.2],]}')
    with pytest.raises(InvalidPolynomial) as ei:
        Polynomial.load(path)
    assert "line 2" in str(ei.value)


def test_load_reports_field_errors(tmp_path):
    path = tmp_path / "badfield.json"
    path.write_text(json.dumps({"degree": 2, "roots": [[0.1, 0.2], [0.3]]}))
    with pytest.raises(InvalidPolynomial) as ei:
        Polynomial.load(path)
    assert "roots" in str(ei.value)


def test_content_id_distinguishes():
    a = Polynomial.from_roots([0.1, 0.2])
    b = Polynomial.from_roots([0.1, 0.2000000001])
    assert a.content_id() == Polynomial.from_roots([0.1, 0.2]).content_id()
    assert a.content_id() != b.content_id()
