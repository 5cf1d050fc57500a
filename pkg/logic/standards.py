import logging
import math
from dataclasses import dataclass
from enum import Enum
from functools import lru_cache
from pathlib import Path
from typing import Callable, Optional, Tuple

import numpy as np
import yaml
from scipy import integrate

from logic.errors import CapabilityError, ExhaustionError, ParameterError
from logic.notions import HALF, Kind, NotionSpec, log_of
from logic.primes import (DEFAULT_PRIMALITY, DEFAULT_RETRY_BUDGET, DEFAULT_SIEVE_LIMIT,
                          ORDERS, SideCondition, coprime_density_factor, coprime_mask,
                          gcd_pass_fraction, is_prime, primes_in, random_prime_in,
                          uniform_integer)
from logic.sampling import GenResult

logger = logging.getLogger(__name__)

STANDARDS_PATH = Path(__file__).resolve().parent.parent / 'config' / 'standards.yaml'
GNUPG_FACTOR = 1 / (2 * math.log(2) - 1)
MODELS = ('published', 'exact')
FITS = ('exact', 'congruent', 'reflected')
DEFAULT_PAIR_LIMIT = 2 * 10 ** 7


class StandardId(Enum):
    RSA_OAEP = 'rsa-oaep'
    IEEE_1363 = 'ieee-1363'
    FIPS_186_3 = 'fips-186-3'
    NESSIE = 'nessie'
    OPENSSL = 'openssl'
    OPENSWAN = 'openswan'
    GNUPG = 'gnupg'
    GNU_CRYPTO = 'gnu-crypto'


# e is chosen once the primes are fixed
_E_AFTERWARDS = (StandardId.OPENSSL, StandardId.GNUPG, StandardId.GNU_CRYPTO)


def parse_standard(value):
    if isinstance(value, StandardId):
        return value
    text = str(value).strip().lower().replace('_', '-')
    for standard in StandardId:
        if text in (standard.value, standard.name.lower().replace('_', '-')):
            return standard
    raise ParameterError(f'unknown standard {value!r}; choose from '
                         f'{", ".join(standard.value for standard in StandardId)}')


@lru_cache(maxsize=4)
def standard_table(path=STANDARDS_PATH):
    with open(path) as stream:
        return yaml.safe_load(stream)


def display_name(standard):
    return standard_table()['standards'][parse_standard(standard).value]['name']


@dataclass(frozen=True)
class StandardParams:
    k: int
    e: Optional[int] = None
    fips_aux_bits: Optional[int] = None
    fips_distance_exponent: Optional[int] = None

    def __post_init__(self):
        if self.k < 8:
            raise ParameterError(f'bit length k must be at least 8, got {self.k}')
        if self.fips_aux_bits is not None and not 1 <= self.fips_aux_bits <= 20:
            raise ParameterError(f'fips_aux_bits must lie in [1, 20], got {self.fips_aux_bits}')
        if self.fips_distance_exponent is not None and self.fips_distance_exponent < 0:
            raise ParameterError('fips_distance_exponent must be nonnegative')
        SideCondition(self.e)

    @property
    def distance_bound_squared(self):
        # |p - q| > 2^(k/2 - 100), squared so that odd k stays integral
        if self.fips_distance_exponent is not None:
            return 1 << (2 * self.fips_distance_exponent)
        return 1 << max(0, self.k - 200)


@dataclass(frozen=True)
class SelectionScheme:
    first: Tuple[int, int]
    second: Callable[[int], Tuple[int, int]]
    accept: Callable
    redraw_first: bool
    cond: SideCondition
    extra: Optional[Callable[[int], bool]] = None
    # second stage draws integers and checks the length before primality
    length_first: bool = False

    def admits(self, p, q):
        lo, hi = self.first
        q_lo, q_hi = self.second(p)
        if not (lo <= p <= hi and q_lo <= q <= q_hi):
            return False
        if not (self.cond.admits(p) and self.cond.admits(q)):
            return False
        if self.extra is not None and not (self.extra(p) and self.extra(q)):
            return False
        return bool(self.accept(p, q))


def _always(p, q):
    # elementwise True for ints and arrays
    return q == q


def _has_large_factor(n, bits):
    # n keeps a prime factor >= 2^bits once every smaller prime is divided out
    small = primes_in(2, (1 << bits) - 1)
    if n < 2 ** 62:
        divisors = small[np.int64(n) % small == 0].tolist()
    else:
        divisors = [prime for prime in small.tolist() if n % prime == 0]
    for prime in divisors:
        while n % prime == 0:
            n //= prime
    return n > 1


def _fips_auxiliary(bits):
    def check(p):
        return _has_large_factor(p - 1, bits) and _has_large_factor(p + 1, bits)
    return check


def _bit_interval(low_exponent, high_exponent):
    return 1 << low_exponent, (1 << high_exponent) - 1


def scheme_for(standard, params):
    """The literal two-stage selection of a standard at bit length k."""
    standard = parse_standard(standard)
    k = params.k
    cond = SideCondition(params.e)
    balanced = _bit_interval((k - 1) // 2, (k + 1) // 2)

    if standard is StandardId.RSA_OAEP:
        interval = (math.isqrt(1 << (k - 1)) + 1, math.isqrt((1 << k) - 1))
        return SelectionScheme(interval, lambda p: interval, _always, False, cond)

    if standard is StandardId.IEEE_1363:
        return SelectionScheme(balanced,
                               lambda p: ((1 << (k - 1)) // p + 1, (1 << k) // p),
                               _always, False, cond)

    if standard is StandardId.FIPS_186_3:
        if params.e is not None and not (1 << 16) < params.e < (1 << 256):
            if k >= 64:
                raise ParameterError(f'FIPS 186-3 needs 2^16 < e < 2^256, got {params.e}')
            logger.warning('public exponent %d outside the FIPS 186-3 range, accepted at k=%d',
                           params.e, k)
        interval = (math.isqrt((1 << (k - 1)) - 1) + 1, math.isqrt(1 << k) - 1)
        bound = params.distance_bound_squared
        extra = _fips_auxiliary(params.fips_aux_bits) if params.fips_aux_bits else None
        return SelectionScheme(interval, lambda p: interval,
                               lambda p, q: (p - q) ** 2 > bound, False, cond, extra)

    if standard is StandardId.NESSIE:
        if k % 2:
            raise ParameterError(f'NESSIE needs an even bit length, got {k}')
        interval = _bit_interval(k // 2 - 1, k // 2)
        return SelectionScheme(interval, lambda p: interval, _always, False, cond)

    if standard in _E_AFTERWARDS and params.e is not None:
        logger.info('%s draws its primes before choosing e; ignoring e=%d',
                    display_name(standard), params.e)
        cond = SideCondition()

    if standard is StandardId.OPENSSL:
        smaller = _bit_interval((k - 3) // 2, (k - 1) // 2)
        return SelectionScheme(balanced, lambda p: smaller, _always, False, cond)

    if standard is StandardId.OPENSWAN:
        interval = _bit_interval((k - 2) // 2, k // 2)
        return SelectionScheme(interval, lambda p: interval, _always, False, cond)

    if standard is StandardId.GNUPG:
        length = 2 * ((k + 1) // 2)
        return SelectionScheme(balanced, lambda p: balanced,
                               lambda p, q: p * q >= 1 << (length - 1), True, cond)

    return SelectionScheme(balanced, lambda p: balanced,
                           lambda p, q: (p * q >= 1 << (k - 1)) & (p * q < 1 << k),
                           False, cond, length_first=True)


def _second_by_length(scheme, p, rng, config, budget):
    # Integer q until pq has the right length, then the primality test
    lo, hi = scheme.second(p)
    tests = rejections = 0
    for _ in range(budget):
        q = uniform_integer(rng, lo, hi)
        if not scheme.accept(p, q):
            rejections += 1
            continue
        if not scheme.cond.admits(q) or (scheme.extra is not None and not scheme.extra(q)):
            continue
        tests += 1
        if is_prime(q, config):
            return q, tests, rejections
    raise ExhaustionError(f'no prime q of the right length for p={p} after {budget} draws')


def generate_standard(standard, params, rng, config=DEFAULT_PRIMALITY,
                      budget=DEFAULT_RETRY_BUDGET, order='gcd_first'):
    scheme = scheme_for(standard, params)
    tests = rejections = 0
    p = None
    for _ in range(budget):
        if p is None:
            draw = random_prime_in(*scheme.first, scheme.cond, rng, config, budget=budget,
                                   order=order, extra=scheme.extra)
            tests += draw.tests
            p = draw.prime
        if scheme.length_first:
            q, spent, skipped = _second_by_length(scheme, p, rng, config, budget)
            return GenResult(p, q, p * q, tests + spent, rejections + skipped)
        draw = random_prime_in(*scheme.second(p), scheme.cond, rng, config, budget=budget,
                               order=order, extra=scheme.extra)
        tests += draw.tests
        q = draw.prime
        if scheme.accept(p, q):
            return GenResult(p, q, p * q, tests, rejections)
        rejections += 1
        if scheme.redraw_first:
            p = None
    raise ExhaustionError(f'{display_name(standard)} found no acceptable pair at '
                          f'k={params.k} after {budget} rounds')


@dataclass(frozen=True)
class StandardNotion:
    standard: StandardId
    spec: NotionSpec
    x: int
    convention: str
    fit: str


def notion_of(standard, k):
    standard = parse_standard(standard)
    x = 1 << k
    fit = 'exact'
    if standard in (StandardId.RSA_OAEP, StandardId.FIPS_186_3):
        spec = NotionSpec(Kind.FIX, 2, sigma=0)
    elif standard is StandardId.IEEE_1363:
        spec = NotionSpec(Kind.ALGVAR, 2, sigma=HALF if k % 2 else 0)
    elif standard in (StandardId.NESSIE, StandardId.OPENSSL, StandardId.OPENSWAN):
        spec = NotionSpec(Kind.FIX, 4, sigma=0)
        if standard is StandardId.OPENSSL:
            fit = 'congruent'
        if standard is StandardId.OPENSWAN:
            x = 1 << (2 * (k // 2))
    else:
        spec = NotionSpec(Kind.FIX, 2, sigma=1)
        if standard is StandardId.GNUPG or k % 2 == 0:
            fit = 'reflected'
    convention = standard_table()['standards'][standard.value]['convention']
    return StandardNotion(standard, spec, x, convention, fit)


def _interval_cost(lo, hi):
    # Integers per prime in [lo, hi], from the li density, scaled by hi
    log_lo, log_hi = log_of(lo), log_of(hi)
    mass, _ = integrate.quad(lambda s: math.exp(s - log_hi) / s, log_lo, log_hi,
                             epsrel=1e-10, limit=200)
    return -math.expm1(log_lo - log_hi) / mass


def _length_window(k, p, interval):
    # q in interval with 2^(k-1) <= pq < 2^k
    lo, hi = interval
    return max(lo, -(-(1 << (k - 1)) // p)), min(hi, ((1 << k) - 1) // p)


def expected_tests(standard, k, e=None, model='published', order='gcd_first'):
    """Expected number of primality tests for one key.

    'published' gives the usual cost statements in terms of k ln 2;
    'exact' follows the literal intervals and loops, including the effect
    of checking gcd(p - 1, e) before or after the primality test.
    """
    standard = parse_standard(standard)
    if model not in MODELS:
        raise ParameterError(f'model must be one of {MODELS}, got {model!r}')
    if order not in ORDERS:
        raise ParameterError(f'order must be one of {ORDERS}, got {order!r}')
    gcd_applies = e is not None and standard not in _E_AFTERWARDS

    if model == 'published':
        base = k * math.log(2)
        if standard is StandardId.NESSIE:
            base *= 2
        elif standard is StandardId.GNUPG:
            base = GNUPG_FACTOR * (k + 1) * math.log(2)
        return base / float(coprime_density_factor(e)) if gcd_applies else base

    scheme = scheme_for(standard, StandardParams(k=k))
    lo, hi = scheme.first
    first = _interval_cost(lo, hi)
    middle = math.isqrt(lo * hi)
    second = _interval_cost(*scheme.second(middle))
    if standard is StandardId.GNUPG:
        base = (first + second) / (2 - 2 * math.log(2))
    elif standard is StandardId.GNU_CRYPTO:
        base = first + _interval_cost(*_length_window(k, middle, scheme.second(middle)))
    else:
        base = first + second
    if not gcd_applies:
        return base
    density = float(coprime_density_factor(e))
    if order == 'gcd_first':
        return base * float(gcd_pass_fraction(e)) / density
    return base / density


@dataclass(frozen=True)
class PairDistribution:
    p: np.ndarray
    q: np.ndarray
    probability: np.ndarray


def _admissible(scheme, lo, hi, sieve_limit):
    primes = primes_in(lo, hi, sieve_limit)
    primes = primes[coprime_mask(primes, scheme.cond.e)]
    if scheme.extra is not None:
        primes = primes[np.array([scheme.extra(p) for p in primes.tolist()], dtype=bool)]
    return primes


def pair_distribution(standard, params, sieve_limit=DEFAULT_SIEVE_LIMIT,
                      pair_limit=DEFAULT_PAIR_LIMIT):
    """Exact output distribution of a standard, from its stage structure."""
    scheme = scheme_for(standard, params)
    firsts = _admissible(scheme, *scheme.first, sieve_limit)
    columns = {}
    rows = []
    pairs = 0
    for p in firsts.tolist():
        interval = scheme.second(p)
        if interval not in columns:
            columns[interval] = _admissible(scheme, *interval, sieve_limit)
        candidates = columns[interval]
        kept = candidates[np.asarray(scheme.accept(p, candidates), dtype=bool)]
        pairs += len(kept)
        if pairs > pair_limit:
            raise CapabilityError(f'{display_name(standard)} at k={params.k} has more than '
                                  f'{pair_limit} pairs')
        rows.append((p, len(candidates), kept))

    live = [row for row in rows if len(row[2])]
    if not live:
        raise ExhaustionError(f'{display_name(standard)} admits no pair at k={params.k}')
    if len(live) < len(rows) and not scheme.redraw_first:
        logger.warning('%d first primes admit no second prime; the generator never '
                       'returns for them', len(rows) - len(live))

    if scheme.redraw_first:
        # restart from scratch: each accepted pair keeps its two-stage weight
        weights = [np.full(len(kept), 1 / candidates) for _, candidates, kept in live]
    else:
        weights = [np.full(len(kept), 1 / (len(live) * len(kept))) for _, _, kept in live]
    probability = np.concatenate(weights)
    return PairDistribution(np.repeat([p for p, _, _ in live], [len(kept) for _, _, kept in live]),
                            np.concatenate([kept for _, _, kept in live]),
                            probability / probability.sum())
