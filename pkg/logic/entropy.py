"""Output entropy of notions and standards.

Exact entropies come from the full pair distribution of a generator at desk
scale. Analytic entropies use log2 of the count main term, minus one bit for
the products convention and minus the non-uniformity loss of two-stage
generators.
"""
import logging
import math
from dataclasses import dataclass, replace
from typing import Optional

import numpy as np
import pandas as pd
from scipy import stats

from logic.counting import (DEFAULT_EXACT_COUNT_LIMIT, count_main_term, slice_mass,
                            slice_prime_counts)
from logic.errors import CapabilityError, EmptyRegionError, ParameterError
from logic.notions import compile_region, format_number, parse_notion
from logic.primes import DEFAULT_SIEVE_LIMIT, NO_CONDITION
from logic.standards import (DEFAULT_PAIR_LIMIT, StandardId, StandardParams, notion_of,
                             pair_distribution, parse_standard, standard_table)

logger = logging.getLogger(__name__)

METHODS = ('exact_enumeration', 'analytic', 'monte_carlo')
CONVENTIONS = ('pairs', 'products')
GENERATORS = ('uniform', 'biased')
MIN_ANALYTIC_BITS = 64
# products of two int64 primes must stay exact
_MAX_EXACT_BITS = 62
_BIASED_STANDARDS = (StandardId.IEEE_1363, StandardId.GNU_CRYPTO)


@dataclass(frozen=True)
class EntropyReport:
    pair_entropy_bits: float
    product_entropy_bits: float
    loss_bits: float
    loss_permille: float
    method: str
    convention: str = 'pairs'
    support_size: Optional[int] = None
    chain_rule_gap: Optional[float] = None

    @property
    def entropy_bits(self):
        if self.convention == 'products':
            return self.product_entropy_bits
        return self.pair_entropy_bits


def _permille(loss, entropy):
    return 1000 * loss / entropy if entropy > 0 else 0.0


def _bits(probability):
    return float(stats.entropy(probability, base=2))


def _check_convention(convention):
    if convention not in CONVENTIONS:
        raise ParameterError(f'convention must be one of {CONVENTIONS}, got {convention!r}')


def product_entropy_bounds(pair_entropy):
    if pair_entropy < 0:
        raise ParameterError(f'pair entropy must be nonnegative, got {pair_entropy}')
    return max(0.0, pair_entropy - 1), float(pair_entropy)


def loss_bound_from_ratio(epsilon):
    # Probabilities within [2^-eps, 2^eps] / N lose at most eps bits
    if epsilon < 0:
        raise ParameterError(f'epsilon must be nonnegative, got {epsilon}')
    return float(epsilon)


def epsilon_from_probabilities(probability):
    probability = np.asarray(probability, dtype=float)
    probability = probability[probability > 0]
    if len(probability) == 0:
        raise ParameterError('no positive probabilities')
    size = len(probability)
    return max(0.0, math.log2(probability.max() * size), -math.log2(probability.min() * size))


def probability_ratio(probability):
    probability = np.asarray(probability, dtype=float)
    probability = probability[probability > 0]
    return float(probability.max() / probability.min())


def _chain_rule_gap(p, probability, pair_bits):
    # H(P) + H(Q | P), evaluated per first prime
    firsts, index = np.unique(p, return_inverse=True)
    marginal = np.bincount(index, weights=probability)
    order = np.argsort(index, kind='stable')
    bounds = np.cumsum(np.bincount(index))
    conditional = sum(marginal[group] * _bits(probability[order[start:end]])
                      for group, (start, end) in enumerate(zip(np.r_[0, bounds[:-1]], bounds)))
    logger.debug('%d first primes, H(P)=%.6f', len(firsts), _bits(marginal))
    return abs(pair_bits - (_bits(marginal) + conditional))


def _report_from_pairs(p, q, probability, convention):
    pair_bits = _bits(probability)
    _, index = np.unique(p.astype(np.int64) * q.astype(np.int64), return_inverse=True)
    product_bits = _bits(np.bincount(index, weights=probability))
    loss = max(0.0, math.log2(len(probability)) - pair_bits)
    report = EntropyReport(pair_entropy_bits=pair_bits,
                           product_entropy_bits=product_bits,
                           loss_bits=loss,
                           loss_permille=0.0,
                           method='exact_enumeration',
                           convention=convention,
                           support_size=len(probability),
                           chain_rule_gap=_chain_rule_gap(p, probability, pair_bits))
    return _with_permille(report)


def _with_permille(report):
    return replace(report, loss_permille=_permille(report.loss_bits, report.entropy_bits))


def _standard_or_none(source):
    if isinstance(source, StandardId):
        return source
    try:
        return parse_standard(source)
    except ParameterError:
        return None


def _notion_pairs(spec, x, cond, generator, exact_count_limit, sieve_limit, pair_limit):
    table = slice_prime_counts(spec, x, cond, exact_count_limit=exact_count_limit,
                               sieve_limit=sieve_limit)
    if table.total == 0:
        raise EmptyRegionError(f'{spec.label} holds no prime pair at x={format_number(x)}')
    if table.total > pair_limit:
        raise CapabilityError(f'{spec.label} at x={format_number(x)} has {table.total} pairs, '
                              f'more than {pair_limit}')
    p, q = table.pairs()
    if generator == 'uniform':
        probability = np.full(table.total, 1 / table.total)
    else:
        probability = np.repeat(1 / (len(table.outer) * table.counts), table.counts)
    return p, q, probability


def entropy_exact(source, k=None, x=None, cond=NO_CONDITION, generator='uniform',
                  convention=None, fips_aux_bits=None, sieve_limit=DEFAULT_SIEVE_LIMIT,
                  exact_count_limit=DEFAULT_EXACT_COUNT_LIMIT, pair_limit=DEFAULT_PAIR_LIMIT):
    """Entropies of the exact output distribution.

    `source` is a standard (with bit length k) or a notion (at x, or 2^k).
    For notions, `generator` picks the uniform generator or the biased
    two-stage one.
    """
    cond = cond or NO_CONDITION
    if generator not in GENERATORS:
        raise ParameterError(f'generator must be one of {GENERATORS}, got {generator!r}')
    standard = _standard_or_none(source)

    if standard is not None:
        if k is None:
            raise ParameterError('a standard needs the bit length k')
        if k > _MAX_EXACT_BITS:
            raise CapabilityError(f'exact enumeration stops at k={_MAX_EXACT_BITS}, got {k}')
        params = StandardParams(k=k, e=cond.e, fips_aux_bits=fips_aux_bits)
        distribution = pair_distribution(standard, params, sieve_limit=sieve_limit,
                                         pair_limit=pair_limit)
        convention = convention or notion_of(standard, k).convention
        p, q, probability = distribution.p, distribution.q, distribution.probability
    else:
        spec = parse_notion(source)
        if x is None:
            if k is None:
                raise ParameterError('a notion needs x or k')
            x = 1 << k
        if compile_region(spec, x).log_x > _MAX_EXACT_BITS * math.log(2):
            raise CapabilityError(f'exact enumeration stops at x=2^{_MAX_EXACT_BITS}')
        convention = convention or 'pairs'
        p, q, probability = _notion_pairs(spec, x, cond, generator, exact_count_limit,
                                          sieve_limit, pair_limit)
    _check_convention(convention)
    return _report_from_pairs(p, q, probability, convention)


def biased_loss_bits(spec, x):
    """Entropy loss of the two-stage generator over a notion.

    The first prime follows the projected prime density and the second is
    uniform in its column, so the loss is the Jensen gap of the column prime
    counts G under that marginal: log2 E[G] - E[log2 G].
    """
    region = compile_region(parse_notion(spec), x)
    if region.empty:
        raise EmptyRegionError(f'{region.spec.label} is empty at x={format_number(region.x)}')
    h = region.half_log_x

    def weight(t):
        return math.exp(t) / (h + t)

    def column(t):
        return slice_mass(region, t, False, h)

    def log_column(t):
        mass = column(t)
        return math.log2(mass) if mass > 0 else 0.0

    total = region.integrate(weight)
    mean = region.integrate(lambda t: weight(t) * column(t)) / total
    mean_log = region.integrate(lambda t: weight(t) * log_column(t)) / total
    return max(0.0, math.log2(mean) - mean_log)


def entropy_analytic(source, k=None, x=None, cond=NO_CONDITION, generator='uniform',
                     convention=None):
    cond = cond or NO_CONDITION
    standard = _standard_or_none(source)
    if standard is not None:
        if k is None or k < MIN_ANALYTIC_BITS:
            raise ParameterError(f'analytic entropy needs k >= {MIN_ANALYTIC_BITS}, got {k}')
        mapping = notion_of(standard, k)
        spec, x = mapping.spec, mapping.x
        convention = convention or mapping.convention
        biased = standard in _BIASED_STANDARDS
    else:
        spec = parse_notion(source)
        if x is None:
            if k is None:
                raise ParameterError('a notion needs x or k')
            x = 1 << k
        convention = convention or 'pairs'
        if generator not in GENERATORS:
            raise ParameterError(f'generator must be one of {GENERATORS}, got {generator!r}')
        biased = generator == 'biased'
    _check_convention(convention)

    uniform_bits = count_main_term(spec, x, cond).log2_main_term
    loss = biased_loss_bits(spec, x) if biased else 0.0
    pair_bits = uniform_bits - loss
    report = EntropyReport(pair_entropy_bits=pair_bits,
                           product_entropy_bits=pair_bits - 1,
                           loss_bits=loss,
                           loss_permille=0.0,
                           method='analytic',
                           convention=convention)
    return _with_permille(report)


def _miller_madow(counts, samples):
    frequency = counts / samples
    return _bits(frequency) + (len(counts) - 1) / (2 * samples * math.log(2))


def entropy_monte_carlo(p, q, convention='pairs'):
    """Plug-in entropy of sampled pairs with the Miller-Madow correction.

    The loss is measured against the observed support.
    """
    _check_convention(convention)
    frame = pd.DataFrame({'p': list(p), 'q': list(q)})
    samples = len(frame)
    if samples == 0:
        raise ParameterError('no samples')
    pair_counts = frame.value_counts().to_numpy(dtype=float)
    products = pd.Series([int(a) * int(b) for a, b in zip(frame['p'], frame['q'])])
    product_counts = products.value_counts().to_numpy(dtype=float)

    pair_bits = _miller_madow(pair_counts, samples)
    low, high = product_entropy_bounds(pair_bits)
    product_bits = min(high, max(low, _miller_madow(product_counts, samples)))
    report = EntropyReport(pair_entropy_bits=pair_bits,
                           product_entropy_bits=product_bits,
                           loss_bits=max(0.0, math.log2(len(pair_counts)) - pair_bits),
                           loss_permille=0.0,
                           method='monte_carlo',
                           convention=convention,
                           support_size=len(pair_counts))
    return _with_permille(report)


def table_report(k_list, standards=None):
    """Rows of the standards overview, one per standard and bit length."""
    table = standards or standard_table()
    rows = []
    for k in k_list:
        for name in table['undefined']:
            rows.append({'standard': name, 'notion': 'Undefined', 'k': k,
                         'entropy_bits': None, 'loss_permille': None, 'remarks': '-'})
        for key in table['table_order']:
            entry = table['standards'][key]
            report = entropy_analytic(key, k)
            rows.append({'standard': entry['name'],
                         'notion': str(notion_of(key, k).spec),
                         'k': k,
                         'entropy_bits': report.entropy_bits,
                         'loss_permille': report.loss_permille,
                         'remarks': entry['remarks']})
        logger.info('table rows for k=%d done', k)
    return rows
