import math
from fractions import Fraction

import pytest

from logic.errors import EmptyRegionError, ParameterError
from logic.notions import (HALF, Kind, NotionSpec, Symmetry, area, area_factor, area_numeric,
                           balance, classify_symmetry, compile_region, contains,
                           inner_bound_monotonicity, parse_notion, region_bounds)

ALL_KINDS = ['dm:r=2', 'fix:r=2,sigma=1', 'fix:r=4,sigma=0', 'fix:r=2,sigma=0.5', 'alg:r=2',
             'algvar:r=2,sigma=0.5', 'max:r=2,c1=0.4']


@pytest.mark.parametrize('notion, x, y, z, expected', [
    ('fix:r=2,sigma=1', 300, 13, 17, True),
    ('alg:r=2', 100, 7, 11, True),
    ('dm:r=2', 100, 3, 23, False),
    ('fix:r=2,sigma=0', 2 ** 16, 200, 200, True),
    ('fix:r=2,sigma=0', 2 ** 16, 181, 200, False),
    ('alg:r=2', 100, 10, 10, True),
    ('alg:r=2', 100, 5, 15, False),
])
def test_contains_examples(notion, x, y, z, expected):
    assert contains(parse_notion(notion), x, y, z) is expected


def test_contains_rejects_small_coordinates():
    with pytest.raises(ParameterError):
        contains(parse_notion('alg:r=2'), 100, 1, 50)


@pytest.mark.parametrize('text', ['dm:r=2', 'fix:r=2,sigma=1', 'fix:r=2,sigma=0.5',
                                  'alg:r=4', 'algvar:r=2,sigma=0.5', 'max:r=2,c1=0.3',
                                  'fix:r=2,sigma=1+sym', 'alg:r=2+top'])
def test_parse_notion_round_trip(text):
    spec = parse_notion(text)
    assert str(spec) == text
    assert parse_notion(str(spec)) == spec


@pytest.mark.parametrize('text', ['fix:r=1,sigma=0', 'fix:r=2', 'fix:r=2,sigma=2',
                                  'alg:r=2,sigma=0', 'max:r=2,c1=0.6', 'cube:r=2',
                                  'dm:r=abc', 'dm:r=2,r=3'])
def test_parse_notion_rejects_bad_parameters(text):
    with pytest.raises(ParameterError):
        parse_notion(text)


def test_label():
    assert parse_notion('fix:r=2,sigma=1').label == 'FIX[2,1]'
    assert parse_notion('alg:r=2+top').label == 'top(ALG[2])'


def test_region_bounds_alg():
    bounds = region_bounds(parse_notion('alg:r=2'), 100)
    assert bounds.b1 == pytest.approx(5)
    assert bounds.c1_outer == pytest.approx(10)
    low, high = bounds.inner(7)
    assert low == pytest.approx(100 / 14)
    assert high == pytest.approx(100 / 7)


def test_region_bounds_square():
    x = 2 ** 16
    bounds = region_bounds(parse_notion('fix:r=2,sigma=0'), x)
    assert bounds.b1 == pytest.approx(math.sqrt(x / 2))
    assert bounds.c1_outer == pytest.approx(math.sqrt(x))
    for y in (182.0, 220.0, 255.5):
        low, high = bounds.inner(y)
        assert low == pytest.approx(math.sqrt(x / 2))
        assert high == pytest.approx(math.sqrt(x))


def test_region_bounds_max():
    x = 10 ** 5
    bounds = region_bounds(parse_notion('max:r=2,c1=0.4'), x)
    assert bounds.b1 == pytest.approx(100)
    assert bounds.c1_outer == pytest.approx(1000)
    for y in (150.0, 400.0, 900.0):
        low, high = bounds.inner(y)
        assert low == pytest.approx(max(100, x / (2 * y)))
        assert high == pytest.approx(min(1000, x / y))


@pytest.mark.parametrize('notion', ALL_KINDS)
def test_bounds_agree_with_contains(notion, rng):
    spec = parse_notion(notion)
    x = 10 ** 4
    bounds = region_bounds(spec, x)
    ys = rng.uniform(bounds.b1 * 0.9, bounds.c1_outer * 1.1, 2000)
    zs = rng.uniform(x ** 0.3, x ** 0.7, 2000)
    for y, z in zip(ys, zs):
        y, z = Fraction(float(y)), Fraction(float(z))
        assert bounds.contains(float(y), float(z)) == contains(spec, x, y, z)


@pytest.mark.parametrize('notion', ALL_KINDS + ['alg:r=2+sym', 'dm:r=2+top'])
def test_members_respect_tolerance_and_balance(notion):
    spec = parse_notion(notion)
    x = 5000
    params = balance(spec, x)
    region = compile_region(spec, x)
    members = [(y, z) for y in range(2, 200) for z in range(2, 200) if region.contains(y, z)]
    assert members
    for y, z in members:
        assert x / spec.r < y * z <= x
        for value in (y, z):
            assert x ** params.c1 * (1 - 1e-12) <= value <= x ** params.c2 * (1 + 1e-12)


def test_symmetrized_and_top_half():
    x = 3000
    sym = compile_region(parse_notion('alg:r=2+sym'), x)
    top = compile_region(parse_notion('alg:r=2+top'), x)
    for y in range(2, 120):
        for z in range(2, 120):
            assert sym.contains(y, z) == sym.contains(z, y)
            if top.contains(y, z):
                assert z >= y


@pytest.mark.parametrize('notion, expected', [
    ('fix:r=2,sigma=0', Symmetry.SYMMETRIC),
    ('dm:r=2', Symmetry.SYMMETRIC),
    ('max:r=2,c1=0.3', Symmetry.SYMMETRIC),
    ('alg:r=2', Symmetry.NEITHER),
    ('algvar:r=2,sigma=0.5', Symmetry.NEITHER),
    ('alg:r=2+sym', Symmetry.SYMMETRIC),
    ('fix:r=2,sigma=0+top', Symmetry.ANTISYMMETRIC),
])
def test_classify_symmetry(notion, expected):
    assert classify_symmetry(parse_notion(notion)) is expected


@pytest.mark.parametrize('x', [10 ** 3, 2 ** 40, 2 ** 2048])
def test_area_closed_forms(x):
    assert area_factor(parse_notion('fix:r=2,sigma=0'), x) == pytest.approx(1.5 - math.sqrt(2))
    assert area_factor(parse_notion('alg:r=2'), x) == pytest.approx(math.log(2) / 2)
    assert area_factor(parse_notion('dm:r=2'), x) == pytest.approx(math.log(2) / 2)


def test_area_scales_with_x():
    spec = parse_notion('fix:r=2,sigma=0')
    assert area(spec, 10 ** 6) == pytest.approx((1.5 - math.sqrt(2)) * 10 ** 6)
    assert math.isinf(area(spec, 2 ** 2048))


def test_area_vanishes_as_r_tends_to_one():
    x = 10 ** 6
    values = [area_factor(NotionSpec(Kind.ALG, Fraction(1) + Fraction(1, 10 ** k)), x)
              for k in (1, 3, 5)]
    assert values[0] > values[1] > values[2]
    assert values[2] < 1e-5


@pytest.mark.parametrize('notion', ALL_KINDS)
@pytest.mark.parametrize('x', [10 ** 3, 10 ** 6, 10 ** 9])
def test_area_closed_form_matches_quadrature(notion, x):
    spec = parse_notion(notion)
    assert area_numeric(spec, x) == pytest.approx(area(spec, x), rel=1e-6)


def test_area_of_modified_notions():
    x = 10 ** 6
    spec = parse_notion('fix:r=2,sigma=1')
    assert area(spec.top_half(), x) == pytest.approx(area(spec, x) / 2, rel=1e-6)
    assert area(spec.symmetrized(), x) == pytest.approx(area(spec, x), rel=1e-6)


def test_balance_examples():
    params = balance(parse_notion('fix:r=2,sigma=1'), 2 ** 20)
    assert params.c1 == pytest.approx(0.475)
    assert params.c2 == pytest.approx(0.525)

    x = 10 ** 8
    params = balance(parse_notion('dm:r=3'), x)
    assert params.c2 - params.c1 == pytest.approx(1.5 * math.log(3) / math.log(x))

    params = balance(parse_notion('max:r=2,c1=0.3'), x)
    assert (params.c1, params.c2) == pytest.approx((0.3, 0.7))


def test_empty_region_is_a_value():
    spec = NotionSpec(Kind.MAX, 2, c1=HALF)
    bounds = region_bounds(spec, 10 ** 6)
    assert bounds.is_empty
    assert area(spec, 10 ** 6) == 0.0
    with pytest.raises(EmptyRegionError):
        balance(spec, 10 ** 6)


@pytest.mark.parametrize('notion, lower, upper', [
    ('fix:r=2,sigma=1', {'constant', 'decreasing'}, {'constant', 'decreasing'}),
    ('alg:r=2', {'decreasing'}, {'decreasing'}),
    ('dm:r=2', {'increasing', 'decreasing'}, {'increasing', 'decreasing'}),
])
def test_inner_bounds_are_monotone(notion, lower, upper):
    pieces = inner_bound_monotonicity(parse_notion(notion), 10 ** 6)
    assert pieces
    for piece in pieces:
        assert piece.lower in lower
        assert piece.upper in upper


def test_compile_region_is_cached():
    spec = parse_notion('alg:r=2')
    assert compile_region(spec, 10 ** 6) is compile_region(spec, '10^6')
