"""Exact and analytic counts of prime pairs inside a notion."""
import logging
import math
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Tuple

import numpy as np
from joblib import Parallel, delayed, effective_n_jobs
from scipy import integrate, special

from logic.errors import CapabilityError, EmptyRegionError, ParameterError
from logic.notions import (HALF, Kind, NotionSpec, area_factor, balance, compile_region,
                           format_number, to_fraction)
from logic.primes import (DEFAULT_SIEVE_LIMIT, NO_CONDITION, coprime_density_factor,
                          coprime_mask, primes_in)

logger = logging.getLogger(__name__)

DEFAULT_EXACT_COUNT_LIMIT = 2 ** 40
_SHIFT = 1e-9
_PAD_BITS = 36
_SCAN_WIDTH = 16
_LOG2 = math.log(2)


def _check_limit(region, exact_count_limit):
    if region.x > exact_count_limit:
        raise CapabilityError(f'x={format_number(region.x)} exceeds the exact-count '
                              f'limit {exact_count_limit}')


def _admissible_primes(region, cond, sieve_limit):
    reach = region.sqrt_x * math.exp(max(region.u_max, region.v_max))
    top = min(math.floor(region.x), math.floor(reach) + 2)
    primes = primes_in(2, top, sieve_limit)
    return primes[coprime_mask(primes, cond.e)]


def _outer_primes(region, primes):
    lo = math.floor(region.sqrt_x * math.exp(region.u_min)) - 1
    hi = math.floor(region.sqrt_x * math.exp(region.u_max)) + 2
    return primes[np.searchsorted(primes, lo):np.searchsorted(primes, hi, side='right')]


def _merge(ranges):
    ranges.sort()
    merged = []
    for lo, hi in ranges:
        if merged and lo <= merged[-1][1] + 1:
            merged[-1] = (merged[-1][0], max(merged[-1][1], hi))
        else:
            merged.append((lo, hi))
    return merged


def _first_inside(inside, lo, hi, guess):
    # Smallest member of [lo, hi]; hi is a member and membership is monotone
    if lo < guess - 2 and guess + 2 < hi and not inside(guess - 2) and inside(guess + 2):
        lo, hi = guess - 1, guess + 2
    while lo < hi:
        middle = (lo + hi) // 2
        if inside(middle):
            hi = middle
        else:
            lo = middle + 1
    return lo


def _last_inside(inside, lo, hi, guess):
    if lo < guess - 2 and guess + 2 < hi and inside(guess - 2) and not inside(guess + 2):
        lo, hi = guess - 2, guess + 1
    while lo < hi:
        middle = (lo + hi + 1) // 2
        if inside(middle):
            lo = middle
        else:
            hi = middle - 1
    return lo


def _runs(members):
    ranges = []
    for q in members:
        if ranges and q == ranges[-1][1] + 1:
            ranges[-1] = (ranges[-1][0], q)
        else:
            ranges.append((q, q))
    return ranges


def column_ranges(region, p):
    # Integer z-ranges of column y = p, ends decided by exact membership
    u = region.log_coordinate(p)
    pieces = region.slices(u) or region.slices(u - _SHIFT) or region.slices(u + _SHIFT)
    estimates = [(region.integer_at(piece.lo), region.integer_at(piece.hi)) for piece in pieces]

    def inside(q):
        return q > 1 and region.contains(p, q)

    ranges = []
    for index, (lo_est, hi_est) in enumerate(estimates):
        pad = 2 + (hi_est >> _PAD_BITS)
        bottom, top = max(2, lo_est - pad), hi_est + pad
        # windows stop halfway to the neighbouring pieces
        if index:
            bottom = max(bottom, (estimates[index - 1][1] + lo_est) // 2 + 1)
        if index + 1 < len(estimates):
            top = min(top, (hi_est + estimates[index + 1][0]) // 2)
        if top < bottom:
            continue
        if top - bottom <= _SCAN_WIDTH:
            ranges.extend(_runs(q for q in range(bottom, top + 1) if inside(q)))
            continue
        middle = (lo_est + hi_est) // 2
        if not inside(middle):
            logger.debug('column %s: no member at the middle of a piece narrower than its '
                         'rounding window', p)
            continue
        ranges.append((_first_inside(inside, bottom, middle, lo_est),
                       _last_inside(inside, middle, top, hi_est)))
    return _merge(ranges)


def _column_counts(region, outer, primes):
    counts = []
    ranges = []
    for p in outer.tolist():
        column = column_ranges(region, p)
        counts.append(sum(int(np.searchsorted(primes, hi, side='right')
                              - np.searchsorted(primes, lo)) for lo, hi in column))
        ranges.append(tuple(column))
    return np.array(counts, dtype=np.int64), ranges


def _count_block(region, outer, primes):
    counts, _ = _column_counts(region, outer, primes)
    return int(counts.sum())


def count_exact(spec, x, cond=NO_CONDITION, exact_count_limit=DEFAULT_EXACT_COUNT_LIMIT,
                sieve_limit=DEFAULT_SIEVE_LIMIT, n_jobs=1):
    cond = cond or NO_CONDITION
    region = compile_region(spec, x)
    _check_limit(region, exact_count_limit)
    if region.empty:
        return 0
    primes = _admissible_primes(region, cond, sieve_limit)
    outer = _outer_primes(region, primes)
    if len(outer) == 0:
        return 0

    pieces = min(len(outer), 4 * effective_n_jobs(n_jobs))
    blocks = [block for block in np.array_split(outer, pieces) if len(block)]
    partial = Parallel(n_jobs=n_jobs)(delayed(_count_block)(region, block, primes)
                                      for block in blocks)
    total = sum(partial)
    logger.debug('%s at x=%s: %d pairs over %d outer primes',
                 region.spec.label, format_number(region.x), total, len(outer))
    return total


def count_products_exact(spec, x, cond=NO_CONDITION, **limits):
    # Each modulus once: top_half keeps one sorted representative per pair
    region = compile_region(spec, x)
    return count_exact(region.spec.top_half(), region.x, cond, **limits)


def count_exact_brute(spec, x, cond=NO_CONDITION, exact_count_limit=DEFAULT_EXACT_COUNT_LIMIT,
                      sieve_limit=DEFAULT_SIEVE_LIMIT):
    # Double loop over primes with x/r < pq <= x, membership checked pairwise
    cond = cond or NO_CONDITION
    region = compile_region(spec, x)
    _check_limit(region, exact_count_limit)
    if region.empty:
        return 0
    primes = _admissible_primes(region, cond, sieve_limit)
    x_value, r = region.x, region.spec.r
    total = 0
    for p in primes.tolist():
        lo = np.searchsorted(primes, math.floor(x_value / (r * p)), side='right')
        hi = np.searchsorted(primes, math.floor(x_value / p), side='right')
        for q in primes[lo:hi].tolist():
            if region.contains(p, q):
                total += 1
    return total


def count_diagonal(spec, x, cond=NO_CONDITION, exact_count_limit=DEFAULT_EXACT_COUNT_LIMIT,
                   sieve_limit=DEFAULT_SIEVE_LIMIT):
    cond = cond or NO_CONDITION
    region = compile_region(spec, x)
    _check_limit(region, exact_count_limit)
    if region.empty:
        return 0
    outer = _outer_primes(region, _admissible_primes(region, cond, sieve_limit))
    return sum(1 for p in outer.tolist() if region.contains(p, p))


@dataclass(frozen=True)
class SliceTable:
    outer: np.ndarray
    counts: np.ndarray
    ranges: Tuple[Tuple[Tuple[int, int], ...], ...]
    primes: np.ndarray = field(repr=False)

    @property
    def total(self):
        return int(self.counts.sum())

    def column(self, index):
        parts = [self.primes[np.searchsorted(self.primes, lo):
                             np.searchsorted(self.primes, hi, side='right')]
                 for lo, hi in self.ranges[index]]
        return np.concatenate(parts) if parts else np.empty(0, dtype=np.int64)

    def pairs(self):
        firsts = np.repeat(self.outer, self.counts)
        seconds = np.concatenate([self.column(index) for index in range(len(self.outer))]
                                 or [np.empty(0, dtype=np.int64)])
        return firsts, seconds


def slice_prime_counts(spec, x, cond=NO_CONDITION, exact_count_limit=DEFAULT_EXACT_COUNT_LIMIT,
                       sieve_limit=DEFAULT_SIEVE_LIMIT):
    cond = cond or NO_CONDITION
    region = compile_region(spec, x)
    _check_limit(region, exact_count_limit)
    empty = np.empty(0, dtype=np.int64)
    if region.empty:
        return SliceTable(empty, empty, (), empty)
    primes = _admissible_primes(region, cond, sieve_limit)
    outer = _outer_primes(region, primes)
    counts, ranges = _column_counts(region, outer, primes)
    keep = np.flatnonzero(counts > 0)
    return SliceTable(outer[keep], counts[keep], tuple(ranges[index] for index in keep), primes)


def slice_mass(region, t, mirrored, h=None):
    # Integral over the slice at t of e^s (or e^s / (h + s) when h is given)
    total = 0.0
    for piece in region.slices(t, mirrored=mirrored):
        if h is None:
            total += math.exp(piece.hi) - math.exp(piece.lo)
        else:
            value, _ = integrate.quad(lambda s: math.exp(s) / (h + s), piece.lo, piece.hi,
                                      epsrel=1e-11, epsabs=1e-15, limit=200)
            total += value
    return total


def a_tilde_numeric(spec, x, swapped=False):
    # Ratio of the 1/(ln y ln z) integral to 4 area / ln^2 x; swapped puts v outside
    region = compile_region(spec, x)
    if region.empty:
        raise EmptyRegionError(f'{region.spec.label} is empty at x={format_number(region.x)}')
    if balance(region.spec, region.x).c1 <= 0:
        raise ParameterError(f'{region.spec.label} reaches factors below 1 at '
                             f'x={format_number(region.x)}')
    h = region.half_log_x
    weighted = region.integrate(
        lambda t: math.exp(t) / (h + t) * slice_mass(region, t, swapped, h),
        epsrel=1e-10, mirrored=swapped)
    plain = region.integrate(lambda t: math.exp(t) * slice_mass(region, t, swapped),
                             epsrel=1e-11, mirrored=swapped)
    return h * h * weighted / plain


def _power_of_two(log2_value):
    return 2.0 ** log2_value if log2_value < 1023 else math.inf


def explicit_error_bound(spec, x):
    # (log2 bound, x^c1 >= 2657)
    region = compile_region(spec, x)
    params = balance(region.spec, region.x)
    if params.c1 <= 0:
        raise ParameterError('explicit bound needs c1 > 0')
    c1, c2, log_x = params.c1, params.c2, region.log_x
    terms = [math.log((7 - 6 * c2 + 12 / log_x) / (4 * math.pi * c1)) + (1 + c2) / 2 * log_x,
             (0.5 + 2 * math.log(log_x) / log_x) * log_x - math.log(8 * math.pi ** 2),
             math.log((1 + 4 / log_x) / (4 * math.pi * c1)) + (1 - c1 / 2) * log_x]
    return float(special.logsumexp(terms)) / _LOG2, c1 * log_x >= math.log(2657)


def _log2_theorem_scale(region, c1):
    kind = region.spec.kind
    log2_x = region.log_x / _LOG2
    log2_r = region.log_r / _LOG2
    if kind is Kind.FIX:
        return 0.75 * log2_x + 0.25 * log2_r
    if kind is Kind.MAX:
        return -math.log2(c1) + (1 - c1 / 2) * log2_x
    return 0.75 * log2_x + 0.5 * log2_r


@dataclass(frozen=True)
class CountEstimate:
    main_term: float
    log2_main_term: float
    a_tilde: float
    a_tilde_bracket: Tuple[float, float]
    error_bound_magnitude: float
    log2_error_bound: float
    log2_theorem_error_scale: float
    log2_explicit_error_bound: float
    explicit_bound_valid: bool
    density_factor: float = 1.0


def count_main_term(spec, x, cond=NO_CONDITION):
    cond = cond or NO_CONDITION
    region = compile_region(spec, x)
    if region.log_r >= region.log_x:
        raise ParameterError(f'ln r must stay below ln x for {region.spec.label}')
    if region.empty:
        raise EmptyRegionError(f'{region.spec.label} is empty at x={format_number(region.x)}')

    params = balance(region.spec, region.x)
    a_tilde = a_tilde_numeric(region.spec, region.x)
    density = float(coprime_density_factor(cond.e)) ** 2 if cond.active else 1.0
    log_x = region.log_x
    log2_main = (math.log2(a_tilde) + 2 + math.log2(area_factor(region.spec, region.x))
                 + log_x / _LOG2 - 2 * math.log2(log_x) + math.log2(density))

    spread = max(2 * params.c2 - 1, 1 - 2 * params.c1)
    log2_error = -math.log2(params.c1) + (3 + spread) / 4 * log_x / _LOG2
    log2_explicit, valid = explicit_error_bound(region.spec, region.x)
    return CountEstimate(main_term=_power_of_two(log2_main),
                         log2_main_term=log2_main,
                         a_tilde=a_tilde,
                         a_tilde_bracket=(1 / (4 * params.c2 ** 2), 1 / (4 * params.c1 ** 2)),
                         error_bound_magnitude=_power_of_two(log2_error),
                         log2_error_bound=log2_error,
                         log2_theorem_error_scale=_log2_theorem_scale(region, params.c1),
                         log2_explicit_error_bound=log2_explicit,
                         explicit_bound_valid=valid,
                         density_factor=density)


def count_analytic(spec, x, cond=NO_CONDITION):
    region = compile_region(spec, x)
    if region.empty:
        return 0.0
    return count_main_term(region.spec, region.x, cond).main_term


@dataclass(frozen=True)
class EnclosureStep:
    chain: str
    smaller: str
    larger: str
    smaller_count: Fraction
    larger_count: Fraction

    @property
    def holds(self):
        return self.smaller_count <= self.larger_count


@dataclass(frozen=True)
class EnclosureReport:
    x: Fraction
    r: Fraction
    steps: Tuple[EnclosureStep, ...]

    @property
    def holds(self):
        return all(step.holds for step in self.steps)


def _enclosure_chains(x, r):
    def fixed(tolerance, sigma):
        return NotionSpec(Kind.FIX, tolerance, sigma=sigma)

    square = r * r
    return {'algorithmic': [(HALF, fixed(r, 1), x), (HALF, NotionSpec(Kind.DM, r), x),
                            (Fraction(1), NotionSpec(Kind.ALG, r), x),
                            (Fraction(1), fixed(square, 1), x)],
            'fixed-bound': [(Fraction(1), fixed(r, 1), x), (Fraction(1), NotionSpec(Kind.DM, r), x),
                            (Fraction(1), fixed(square, HALF), x)],
            'sigma': [(Fraction(1), fixed(r, 1), x / r), (Fraction(1), fixed(square, 0), x),
                      (Fraction(1), fixed(square, HALF), x), (Fraction(1), fixed(square, 1), x)]}


def _describe(weight, spec, x, base_x):
    text = spec.label if weight == 1 else f'{format_number(weight)}*{spec.label}'
    return text if x == base_x else f'{text}(x/{format_number(base_x / x)})'


def enclosure_check(x, r, exact_count_limit=DEFAULT_EXACT_COUNT_LIMIT,
                    sieve_limit=DEFAULT_SIEVE_LIMIT, n_jobs=1):
    x, r = to_fraction(x), to_fraction(r)
    if x > exact_count_limit:
        raise CapabilityError(f'x={format_number(x)} exceeds the exact-count '
                              f'limit {exact_count_limit}')
    counts = {}

    def weighted(weight, spec, at):
        key = (spec, at)
        if key not in counts:
            counts[key] = (count_exact(spec, at, exact_count_limit=exact_count_limit,
                                       sieve_limit=sieve_limit, n_jobs=n_jobs)
                           if at > 1 else 0)
        return weight * counts[key]

    steps = []
    for name, chain in _enclosure_chains(x, r).items():
        for (w1, s1, x1), (w2, s2, x2) in zip(chain, chain[1:]):
            steps.append(EnclosureStep(name, _describe(w1, s1, x1, x), _describe(w2, s2, x2, x),
                                       weighted(w1, s1, x1), weighted(w2, s2, x2)))
    report = EnclosureReport(x, r, tuple(steps))
    if not report.holds:
        logger.warning('enclosure chain broken at x=%s r=%s', format_number(x), format_number(r))
    return report


def count_ratio(first, second, x, **limits):
    # Exact pair-count ratio of two notions at the same x
    denominator = count_exact(second, x, **limits)
    if denominator == 0:
        return math.inf
    return count_exact(first, x, **limits) / denominator
