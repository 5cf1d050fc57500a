import logging
import math
from dataclasses import dataclass
from fractions import Fraction
from functools import lru_cache
from typing import Callable, Optional

import numpy as np
from scipy import special

from logic.errors import CapabilityError, ExhaustionError, ParameterError

logger = logging.getLogger(__name__)

DEFAULT_SIEVE_LIMIT = 2 ** 40
DEFAULT_RETRY_BUDGET = 10 ** 6
SEGMENT_SIZE = 1 << 22

# Strong-pseudoprime witnesses, exact for every n below _WITNESS_LIMIT
_WITNESSES = (2, 3, 5, 7, 11, 13, 17, 19, 23, 29, 31, 37, 41)
_WITNESS_LIMIT = 3317044064679887385961981

ORDERS = ('gcd_first', 'primality_first')


@dataclass(frozen=True)
class PrimalityConfig:
    deterministic_threshold: int = 2 ** 64
    mr_rounds: int = 64

    def __post_init__(self):
        if self.mr_rounds < 1:
            raise ParameterError(f'mr_rounds must be at least 1, got {self.mr_rounds}')
        if not 0 <= self.deterministic_threshold <= _WITNESS_LIMIT:
            raise ParameterError('deterministic_threshold must not exceed '
                                 f'{_WITNESS_LIMIT}')


def check_exponent(e):
    if isinstance(e, bool) or not isinstance(e, (int, np.integer)):
        raise ParameterError(f'public exponent must be an integer, got {e!r}')
    e = int(e)
    if e < 3 or e % 2 == 0:
        raise ParameterError(f'public exponent must be odd and at least 3, got {e}')
    return e


@dataclass(frozen=True)
class SideCondition:
    # gcd(p - 1, e) = 1 for a fixed public exponent e, or no condition
    e: Optional[int] = None

    def __post_init__(self):
        if self.e is not None:
            object.__setattr__(self, 'e', check_exponent(self.e))

    @property
    def active(self):
        return self.e is not None

    def admits(self, n):
        return self.e is None or math.gcd(n - 1, self.e) == 1


DEFAULT_PRIMALITY = PrimalityConfig()
NO_CONDITION = SideCondition()


def _strong_probable_prime(n, base):
    d, s = n - 1, 0
    while d % 2 == 0:
        d //= 2
        s += 1
    value = pow(base, d, n)
    if value in (1, n - 1):
        return True
    for _ in range(s - 1):
        value = value * value % n
        if value == n - 1:
            return True
    return False


def is_prime(n, config=DEFAULT_PRIMALITY):
    n = int(n)
    if n < 2:
        return False
    for small in _WITNESSES:
        if n == small:
            return True
        if n % small == 0:
            return False
    if n < _WITNESSES[-1] ** 2:
        return True
    if n < config.deterministic_threshold:
        bases = _WITNESSES
    else:
        # Same n, same config -> same bases
        chooser = np.random.default_rng(n)
        bases = [uniform_integer(chooser, 2, n - 2) for _ in range(config.mr_rounds)]
    return all(_strong_probable_prime(n, base) for base in bases)


@lru_cache(maxsize=8)
def _base_primes(limit):
    if limit < 2:
        return np.empty(0, dtype=np.int64)
    sieve = np.ones(limit + 1, dtype=bool)
    sieve[:2] = False
    for p in range(2, math.isqrt(limit) + 1):
        if sieve[p]:
            sieve[p * p::p] = False
    return np.flatnonzero(sieve).astype(np.int64)


def primes_in(lo, hi, sieve_limit=DEFAULT_SIEVE_LIMIT):
    """Primes p with lo <= p <= hi, ascending, from a segmented sieve."""
    lo, hi = max(int(lo), 2), int(hi)
    if hi > sieve_limit:
        raise CapabilityError(f'sieve limit {sieve_limit} is below requested bound {hi}')
    if lo > hi:
        return np.empty(0, dtype=np.int64)

    base = _base_primes(math.isqrt(hi))
    chunks = []
    for start in range(lo, hi + 1, SEGMENT_SIZE):
        stop = min(start + SEGMENT_SIZE, hi + 1)
        mask = np.ones(stop - start, dtype=bool)
        for p in base.tolist():
            if p * p >= stop:
                break
            first = max(p * p, -(-start // p) * p)
            mask[first - start::p] = False
        chunks.append(np.flatnonzero(mask).astype(np.int64) + start)
    return np.concatenate(chunks)


def coprime_mask(primes, e):
    # Boolean mask of gcd(p - 1, e) = 1 over a prime array
    if e is None:
        return np.ones(len(primes), dtype=bool)
    if e < 2 ** 62:
        return np.gcd(primes - 1, np.int64(e)) == 1
    return np.array([math.gcd(int(p) - 1, e) == 1 for p in primes], dtype=bool)


def uniform_integer(rng, lo, hi):
    # Uniform integer in [lo, hi] from a numpy Generator, any width
    span = hi - lo + 1
    if span <= 0:
        raise ParameterError(f'empty integer range [{lo}, {hi}]')
    if -2 ** 62 < lo and hi < 2 ** 62:
        return int(rng.integers(lo, hi + 1))
    bits = span.bit_length()
    mask = (1 << bits) - 1
    width = (bits + 7) // 8
    while True:
        value = int.from_bytes(rng.bytes(width), 'little') & mask
        if value < span:
            return lo + value


@dataclass(frozen=True)
class PrimeDraw:
    prime: int
    tests: int
    draws: int


def random_prime_in(lo, hi, cond, rng, config=DEFAULT_PRIMALITY,
                    budget=DEFAULT_RETRY_BUDGET, order='gcd_first',
                    extra: Optional[Callable[[int], bool]] = None):
    """Uniform admissible prime in [lo, hi] by draw-then-test rejection.

    With order='gcd_first' the side condition is checked before the
    primality test, so rejected candidates cost no test. `extra` runs after
    a successful primality test.
    """
    if order not in ORDERS:
        raise ParameterError(f'order must be one of {ORDERS}, got {order!r}')
    cond = cond or NO_CONDITION
    lo, hi = int(lo), int(hi)
    if lo > hi:
        raise ExhaustionError(f'empty interval [{lo}, {hi}]')

    tests = 0
    for draw in range(1, budget + 1):
        candidate = uniform_integer(rng, lo, hi)
        if order == 'gcd_first':
            if not cond.admits(candidate):
                continue
            tests += 1
            if not is_prime(candidate, config):
                continue
        else:
            tests += 1
            if not is_prime(candidate, config) or not cond.admits(candidate):
                continue
        if extra is not None and not extra(candidate):
            continue
        return PrimeDraw(candidate, tests, draw)
    raise ExhaustionError(f'no admissible prime in [{lo}, {hi}] after {budget} draws')


def prime_factors(n):
    factors = []
    candidate = 2
    while candidate * candidate <= n:
        if n % candidate == 0:
            factors.append(candidate)
            while n % candidate == 0:
                n //= candidate
        candidate += 1 if candidate == 2 else 2
    if n > 1:
        factors.append(n)
    return factors


def coprime_density_factor(e):
    # phi_1(e) / phi(e) = prod over primes l | e of (1 - 1/(l - 1))
    e = check_exponent(e)
    factor = Fraction(1)
    for prime in prime_factors(e):
        factor *= 1 - Fraction(1, prime - 1)
    return factor


def gcd_pass_fraction(e):
    # phi(e) / e: share of integers n with gcd(n - 1, e) = 1
    e = check_exponent(e)
    factor = Fraction(1)
    for prime in prime_factors(e):
        factor *= 1 - Fraction(1, prime)
    return factor


def li(x):
    if x <= 1:
        raise ParameterError(f'li needs x > 1, got {x}')
    return float(special.expi(math.log(x)))


def rh_error_bound(x):
    return math.sqrt(x) * math.log(x) / (8 * math.pi)


def count_coprime_primes(x, e, sieve_limit=DEFAULT_SIEVE_LIMIT):
    e = check_exponent(e)
    primes = primes_in(2, math.floor(x), sieve_limit)
    return int(np.count_nonzero(coprime_mask(primes, e)))
