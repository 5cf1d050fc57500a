import logging
from dataclasses import dataclass
from functools import lru_cache

import numpy as np

from logic.counting import (DEFAULT_EXACT_COUNT_LIMIT, column_ranges,
                            slice_prime_counts)
from logic.distributions import cdf_inverse, log_inverse
from logic.errors import EmptyRegionError, ExhaustionError, ParameterError
from logic.notions import compile_region, format_number
from logic.primes import (DEFAULT_PRIMALITY, DEFAULT_RETRY_BUDGET, DEFAULT_SIEVE_LIMIT,
                          NO_CONDITION, is_prime, uniform_integer)

logger = logging.getLogger(__name__)

LOOP_ORDERS = ('membership_first', 'primality_first')
MARGINALS = ('continuous', 'exact')
_MANTISSA_BITS = 53


@dataclass(frozen=True)
class Banner:
    # [y_lo, y_hi] x [z_lo, z_hi] holds every integer member
    y_lo: int
    y_hi: int
    z_lo: int
    z_hi: int

    @property
    def area(self):
        return (self.y_hi - self.y_lo + 1) * (self.z_hi - self.z_lo + 1)

    def contains(self, y, z):
        return self.y_lo <= y <= self.y_hi and self.z_lo <= z <= self.z_hi


@dataclass(frozen=True)
class GenResult:
    p: int
    q: int
    n: int
    primality_tests: int
    region_rejections: int


def _nonempty(spec, x):
    region = compile_region(spec, x)
    if region.empty:
        raise EmptyRegionError(f'{region.spec.label} is empty at x={format_number(region.x)}')
    return region


def _integer_span(region, lo, hi):
    # Integers t with exp(lo) < t / sqrt(x) <= exp(hi), padded by one on each side
    return max(2, region.integer_at(lo)), region.integer_at(hi) + 1


def _outer_integers(region):
    y_min = max(2, region.integer_at(region.u_min) + 1)
    return y_min, max(y_min, region.integer_at(region.u_max))


def banner_for(spec, x):
    region = _nonempty(spec, x)
    y_lo, y_hi = _integer_span(region, region.u_min, region.u_max)
    z_lo, z_hi = _integer_span(region, region.v_min, region.v_max)
    return Banner(y_lo, y_hi, z_lo, z_hi)


def _passes(value, cond, config):
    # (admissible, tests spent): the side condition is checked before primality
    if not cond.admits(value):
        return False, 0
    return is_prime(value, config), 1


def generate_las_vegas(spec, x, cond, rng, config=DEFAULT_PRIMALITY,
                       budget=DEFAULT_RETRY_BUDGET, loop_order='membership_first'):
    # membership_first checks the region before any primality test
    if loop_order not in LOOP_ORDERS:
        raise ParameterError(f'loop_order must be one of {LOOP_ORDERS}, got {loop_order!r}')
    cond = cond or NO_CONDITION
    region = _nonempty(spec, x)
    banner = banner_for(region.spec, region.x)

    tests = rejections = 0
    for _ in range(budget):
        y = uniform_integer(rng, banner.y_lo, banner.y_hi)
        z = uniform_integer(rng, banner.z_lo, banner.z_hi)
        if loop_order == 'membership_first' and not region.contains(y, z):
            rejections += 1
            continue
        ok, spent = _passes(y, cond, config)
        tests += spent
        if ok:
            ok, spent = _passes(z, cond, config)
            tests += spent
        if not ok:
            continue
        if loop_order == 'primality_first' and not region.contains(y, z):
            rejections += 1
            continue
        return GenResult(y, z, y * z, tests, rejections)
    raise ExhaustionError(f'no prime pair in {region.spec.label} at x={format_number(region.x)} '
                          f'after {budget} draws')


def draw_outer(spec, x, rng):
    # Continuous first coordinate with distribution F
    return cdf_inverse(spec, x, float(rng.random()))


def _draw_outer_integer(region, rng):
    # ceil of F^-1(u); bits below the 53 a float carries are drawn uniformly
    y = region.integer_at(log_inverse(region.spec, region.x, float(rng.random()))) + 1
    spare = y.bit_length() - _MANTISSA_BITS
    if spare > 0:
        y = (y >> spare << spare) + uniform_integer(rng, 0, (1 << spare) - 1)
    return y


def _inner_prime(region, y, cond, rng, config):
    # Uniform admissible prime z with (y, z) in the region; None if none turned up
    ranges = column_ranges(region, y)
    widths = [hi - lo + 1 for lo, hi in ranges]
    total = sum(widths)
    tests = 0
    if not total:
        return None, tests
    for _ in range(30 * total + 100):
        offset = uniform_integer(rng, 0, total - 1)
        for (lo, _hi), width in zip(ranges, widths):
            if offset < width:
                candidate = lo + offset
                break
            offset -= width
        ok, spent = _passes(candidate, cond, config)
        tests += spent
        if ok:
            return candidate, tests
    return None, tests


@lru_cache(maxsize=16)
def _slice_table(spec, x, cond, exact_count_limit, sieve_limit):
    return slice_prime_counts(spec, x, cond, exact_count_limit=exact_count_limit,
                              sieve_limit=sieve_limit)


def _exact_pair(spec, x, cond, rng, exact_count_limit, sieve_limit):
    table = _slice_table(spec, x, cond, exact_count_limit, sieve_limit)
    if table.total == 0:
        raise ExhaustionError(f'no prime pair in {spec} at x={format_number(x)}')
    position = int(rng.integers(table.total))
    index = int(np.searchsorted(np.cumsum(table.counts), position, side='right'))
    column = table.column(index)
    before = int(table.counts[:index].sum())
    return int(table.outer[index]), int(column[position - before])


def generate_inverse_transform(spec, x, cond, rng, config=DEFAULT_PRIMALITY,
                               budget=DEFAULT_RETRY_BUDGET, marginal='continuous',
                               exact_count_limit=DEFAULT_EXACT_COUNT_LIMIT,
                               sieve_limit=DEFAULT_SIEVE_LIMIT):
    # exact inverts the cumulative pair count and spends no primality tests
    if marginal not in MARGINALS:
        raise ParameterError(f'marginal must be one of {MARGINALS}, got {marginal!r}')
    cond = cond or NO_CONDITION
    region = _nonempty(spec, x)
    if marginal == 'exact':
        p, q = _exact_pair(region.spec, region.x, cond, rng, exact_count_limit, sieve_limit)
        return GenResult(p, q, p * q, 0, 0)

    y_min, y_max = _outer_integers(region)
    tests = rejections = 0
    for _ in range(budget):
        y = min(y_max, max(y_min, _draw_outer_integer(region, rng)))
        ok, spent = _passes(y, cond, config)
        tests += spent
        if not ok:
            continue
        z, spent = _inner_prime(region, y, cond, rng, config)
        tests += spent
        if z is None:
            rejections += 1
            continue
        return GenResult(y, z, y * z, tests, rejections)
    raise ExhaustionError(f'no prime pair in {region.spec.label} at x={format_number(region.x)} '
                          f'after {budget} draws')


def generate_biased(spec, x, cond, rng, config=DEFAULT_PRIMALITY, budget=DEFAULT_RETRY_BUDGET):
    # First prime uniform over the projection, second uniform over its column
    cond = cond or NO_CONDITION
    region = _nonempty(spec, x)
    y_min, y_max = _outer_integers(region)
    tests = rejections = 0
    for _ in range(budget):
        y = uniform_integer(rng, y_min, y_max)
        ok, spent = _passes(y, cond, config)
        tests += spent
        if not ok:
            continue
        z, spent = _inner_prime(region, y, cond, rng, config)
        tests += spent
        if z is None:
            rejections += 1
            continue
        return GenResult(y, z, y * z, tests, rejections)
    raise ExhaustionError(f'no prime pair in {region.spec.label} at x={format_number(region.x)} '
                          f'after {budget} draws')
