import logging

import numpy as np
from scipy import stats

from logic.counting import slice_prime_counts
from logic.distributions import cdf
from logic.entropy import epsilon_from_probabilities, probability_ratio
from logic.errors import EmptyRegionError, ParameterError
from logic.notions import parse_notion
from logic.sampling import (draw_outer, generate_biased, generate_inverse_transform,
                            generate_las_vegas)
from logic.standards import (StandardParams, display_name, generate_standard,
                             pair_distribution, parse_standard)
from pipeline.runner import Runner

logger = logging.getLogger(__name__)

METHODS = ('las-vegas', 'inverse-transform', 'biased')


def resolve_source(notion=None, standard=None, x=None, bits=None):
    # (notion spec or None, standard id or None, x) for exactly one source
    if (notion is None) == (standard is None):
        raise ParameterError('give exactly one of a notion or a standard')
    if standard is not None:
        if bits is None:
            raise ParameterError('a standard needs the bit length')
        return None, parse_standard(standard), None
    if x is None:
        if bits is None:
            raise ParameterError('a notion needs x or a bit length')
        x = 1 << bits
    return parse_notion(notion), None, x


def make_sampler(runner, notion=None, standard=None, x=None, bits=None,
                 method='inverse-transform', e=None, marginal='continuous',
                 loop_order='membership_first', order='gcd_first', fips_aux_bits=None):
    """A function rng -> GenResult for one notion or standard."""
    spec, standard, x = resolve_source(notion, standard, x, bits)
    if method not in METHODS:
        raise ParameterError(f'method must be one of {METHODS}, got {method!r}')
    cond = runner.condition(e)
    budget = runner.retry_budget

    if standard is not None:
        params = StandardParams(k=bits, e=e, fips_aux_bits=fips_aux_bits)
        return lambda rng: generate_standard(standard, params, rng, runner.primality, budget,
                                             order)
    if method == 'las-vegas':
        return lambda rng: generate_las_vegas(spec, x, cond, rng, runner.primality, budget,
                                              loop_order)
    if method == 'biased':
        return lambda rng: generate_biased(spec, x, cond, rng, runner.primality, budget)
    return lambda rng: generate_inverse_transform(spec, x, cond, rng, runner.primality, budget,
                                                  marginal, **runner.limits)


def _key_record(result):
    return {'p': result.p, 'q': result.q, 'n': result.n, 'tests': result.primality_tests,
            'rejections': result.region_rejections}


class KeyGenerator(Runner):
    def gen(self, notion=None, standard=None, x=None, bits=None, count=1,
            method='inverse-transform', e=None, seed=None, **options):
        if count < 1:
            raise ParameterError(f'count must be positive, got {count}')
        sampler = make_sampler(self, notion, standard, x, bits, method, e, **options)
        rng = self.rng(seed)
        origin = {} if standard is None else {'standard': parse_standard(standard).value,
                                               'k': bits}
        return [dict(_key_record(sampler(rng)), **origin) for _ in range(count)]

    def audit(self, notion=None, standard=None, x=None, bits=None, samples=20000,
              method='inverse-transform', e=None, seed=None, marginal='exact', **options):
        # Chi-square of generated pairs against the exact pair distribution
        if samples < 1:
            raise ParameterError(f'samples must be positive, got {samples}')
        spec, standard_id, x_value = resolve_source(notion, standard, x, bits)
        p, q, probability = self._support(spec, standard_id, x_value, bits, method, e,
                                          options.get('fips_aux_bits'))
        index = {(int(a), int(b)): position for position, (a, b) in enumerate(zip(p, q))}

        sampler = make_sampler(self, notion, standard, x, bits, method, e, marginal=marginal,
                               **options)
        rng = self.rng(seed)
        observed = np.zeros(len(probability))
        outside = tests = 0
        for _ in range(samples):
            result = sampler(rng)
            tests += result.primality_tests
            position = index.get((result.p, result.q))
            if position is None:
                outside += 1
            else:
                observed[position] += 1
        if outside:
            logger.warning('%d of %d samples fell outside the enumerated support',
                           outside, samples)

        inside = observed.sum()
        chi2, p_value = stats.chisquare(observed, inside * probability)
        uniform_chi2, uniform_p_value = stats.chisquare(observed)
        source = display_name(standard_id) if standard_id else spec.label
        return [{'source': source,
                 'method': 'standard' if standard_id else method,
                 'support_size': len(probability),
                 'samples': samples,
                 'outside_support': outside,
                 'chi2': float(chi2),
                 'p_value': float(p_value),
                 'uniform_chi2': float(uniform_chi2),
                 'uniform_p_value': float(uniform_p_value),
                 'probability_ratio': probability_ratio(probability),
                 'epsilon': epsilon_from_probabilities(probability),
                 'mean_primality_tests': tests / samples}]

    def _support(self, spec, standard, x, bits, method, e, fips_aux_bits):
        if standard is not None:
            params = StandardParams(k=bits, e=e, fips_aux_bits=fips_aux_bits)
            distribution = pair_distribution(standard, params, sieve_limit=self.sieve_limit,
                                             pair_limit=self.pair_limit)
            return distribution.p, distribution.q, distribution.probability
        table = slice_prime_counts(spec, x, self.condition(e), **self.limits)
        if table.total == 0:
            raise EmptyRegionError(f'{spec.label} holds no prime pair at x={x}')
        p, q = table.pairs()
        if method == 'biased':
            probability = np.repeat(1 / (len(table.outer) * table.counts), table.counts)
        else:
            probability = np.full(table.total, 1 / table.total)
        return p, q, probability

    def outer_audit(self, notion, x, samples=2000, seed=None):
        # Kolmogorov-Smirnov of the continuous first coordinate against F
        spec = parse_notion(notion)
        rng = self.rng(seed)
        values = np.array([draw_outer(spec, x, rng) for _ in range(samples)])
        statistic, p_value = stats.kstest(values, np.vectorize(lambda y: cdf(spec, x, y)))
        return [{'source': spec.label, 'samples': samples,
                 'ks_statistic': float(statistic), 'p_value': float(p_value)}]
