import math
from collections import Counter

import numpy as np
import pytest
from scipy import stats

from logic.counting import count_exact
from logic.errors import CapabilityError, ParameterError
from logic.notions import contains
from logic.primes import SideCondition, is_prime
from logic.standards import (GNUPG_FACTOR, StandardId, StandardParams, display_name,
                             expected_tests, generate_standard, notion_of, pair_distribution,
                             parse_standard, scheme_for)

IN_NOTION = [StandardId.RSA_OAEP, StandardId.FIPS_186_3, StandardId.IEEE_1363,
             StandardId.NESSIE, StandardId.OPENSWAN]
FULL_LENGTH = [StandardId.RSA_OAEP, StandardId.FIPS_186_3, StandardId.IEEE_1363,
               StandardId.GNUPG, StandardId.GNU_CRYPTO]


@pytest.mark.parametrize('text, expected', [('rsa-oaep', StandardId.RSA_OAEP),
                                            ('GNU_CRYPTO', StandardId.GNU_CRYPTO),
                                            ('ieee_1363', StandardId.IEEE_1363),
                                            (StandardId.GNUPG, StandardId.GNUPG)])
def test_parse_standard(text, expected):
    assert parse_standard(text) is expected


def test_unknown_standard():
    with pytest.raises(ParameterError):
        parse_standard('pkcs-1')


def test_display_names():
    assert display_name('ieee-1363') == 'IEEE 1363-2000'
    assert display_name(StandardId.GNU_CRYPTO) == 'GNU Crypto'


@pytest.mark.parametrize('options', [{'k': 4}, {'k': 64, 'e': 4}, {'k': 64, 'fips_aux_bits': 0},
                                     {'k': 64, 'fips_distance_exponent': -1}])
def test_params_validation(options):
    with pytest.raises(ParameterError):
        StandardParams(**options)


def test_scheme_restrictions():
    with pytest.raises(ParameterError):
        scheme_for(StandardId.NESSIE, StandardParams(k=17))
    with pytest.raises(ParameterError):
        scheme_for(StandardId.FIPS_186_3, StandardParams(k=64, e=3))
    scheme_for(StandardId.FIPS_186_3, StandardParams(k=32, e=3))


@pytest.mark.parametrize('k', [16, 24])
@pytest.mark.parametrize('standard', list(StandardId))
def test_generated_keys_follow_the_scheme(standard, k, rng):
    params = StandardParams(k=k)
    scheme = scheme_for(standard, params)
    for _ in range(20):
        result = generate_standard(standard, params, rng)
        assert is_prime(result.p) and is_prime(result.q)
        assert result.n == result.p * result.q
        assert scheme.admits(result.p, result.q)
        if standard in FULL_LENGTH:
            assert result.n.bit_length() == k


@pytest.mark.parametrize('k', [16, 24])
@pytest.mark.parametrize('standard', IN_NOTION)
def test_generated_keys_lie_in_their_notion(standard, k, rng):
    mapping = notion_of(standard, k)
    for _ in range(20):
        result = generate_standard(standard, StandardParams(k=k), rng)
        assert contains(mapping.spec, mapping.x, result.p, result.q)


def test_side_condition_reaches_both_primes(rng):
    params = StandardParams(k=24, e=3)
    for standard in (StandardId.RSA_OAEP, StandardId.NESSIE, StandardId.OPENSWAN):
        for _ in range(10):
            result = generate_standard(standard, params, rng)
            assert (result.p - 1) % 3 and (result.q - 1) % 3


@pytest.mark.parametrize('standard', ['openssl', 'gnupg', 'gnu-crypto'])
def test_exponent_chosen_afterwards_is_ignored(standard):
    assert scheme_for(standard, StandardParams(k=24, e=3)).cond == SideCondition()
    assert expected_tests(standard, 768, e=3) == expected_tests(standard, 768)


def test_fips_auxiliary_primes(rng):
    params = StandardParams(k=32, fips_aux_bits=4)
    scheme = scheme_for(StandardId.FIPS_186_3, params)
    for _ in range(10):
        result = generate_standard(StandardId.FIPS_186_3, params, rng)
        assert scheme.extra(result.p) and scheme.extra(result.q)


def test_same_seed_same_keys():
    params = StandardParams(k=32)
    first = [generate_standard('gnupg', params, np.random.default_rng(1)) for _ in range(3)]
    second = [generate_standard('gnupg', params, np.random.default_rng(1)) for _ in range(3)]
    assert first == second


@pytest.mark.parametrize('standard, notion, fit', [
    ('rsa-oaep', 'fix:r=2,sigma=0', 'exact'),
    ('fips-186-3', 'fix:r=2,sigma=0', 'exact'),
    ('nessie', 'fix:r=4,sigma=0', 'exact'),
    ('openssl', 'fix:r=4,sigma=0', 'congruent'),
    ('gnupg', 'fix:r=2,sigma=1', 'reflected'),
])
def test_notion_of(standard, notion, fit):
    mapping = notion_of(standard, 1024)
    assert str(mapping.spec) == notion
    assert mapping.fit == fit
    assert mapping.x == 2 ** 1024


def test_ieee_notion_depends_on_parity():
    assert str(notion_of('ieee-1363', 1024).spec) == 'algvar:r=2,sigma=0'
    assert str(notion_of('ieee-1363', 1025).spec) == 'algvar:r=2,sigma=0.5'
    assert notion_of('openswan', 1025).x == 2 ** 1024


def test_published_costs():
    log2 = math.log(2)
    assert expected_tests('rsa-oaep', 768) == pytest.approx(532.33, abs=0.01)
    assert expected_tests('nessie', 768) == pytest.approx(2 * 768 * log2)
    assert expected_tests('gnupg', 768) == pytest.approx(GNUPG_FACTOR * 769 * log2)
    assert GNUPG_FACTOR == pytest.approx(2.5887, abs=1e-4)
    assert expected_tests('rsa-oaep', 768, e=3) == pytest.approx(2 * 768 * log2)
    assert expected_tests('openssl', 768, e=3) == expected_tests('openssl', 768)


def test_exact_cost_model_side_condition():
    base = expected_tests('rsa-oaep', 256, model='exact')
    assert expected_tests('rsa-oaep', 256, e=3, model='exact') == pytest.approx(base * 4 / 3)
    assert expected_tests('rsa-oaep', 256, e=3, model='exact',
                          order='primality_first') == pytest.approx(base * 2)


def test_bad_cost_options():
    with pytest.raises(ParameterError):
        expected_tests('rsa-oaep', 256, model='guess')
    with pytest.raises(ParameterError):
        expected_tests('rsa-oaep', 256, order='random')


@pytest.mark.parametrize('standard, e, order', [
    ('rsa-oaep', None, 'gcd_first'), ('rsa-oaep', 3, 'gcd_first'),
    ('rsa-oaep', 3, 'primality_first'), ('nessie', None, 'gcd_first'),
    ('openssl', None, 'gcd_first'), ('openswan', None, 'gcd_first'),
    ('gnupg', None, 'gcd_first'), ('gnu-crypto', None, 'gcd_first'),
])
def test_measured_cost_matches_exact_model(standard, e, order, rng):
    params = StandardParams(k=64, e=e)
    measured = np.mean([generate_standard(standard, params, rng, order=order).primality_tests
                        for _ in range(1000)])
    expected = expected_tests(standard, 64, e=e, model='exact', order=order)
    assert measured == pytest.approx(expected, rel=0.15)


def test_primality_first_doubles_the_cost_for_e3(rng):
    params = StandardParams(k=64, e=3)
    costs = [np.mean([generate_standard('rsa-oaep', params, rng, order=order).primality_tests
                      for _ in range(1000)]) for order in ('gcd_first', 'primality_first')]
    plain = expected_tests('rsa-oaep', 64, model='exact')
    assert costs[1] == pytest.approx(2 * plain, rel=0.15)
    assert costs[1] / costs[0] == pytest.approx(1.5, rel=0.15)


def test_gnu_crypto_costs_as_much_as_rsa_oaep(rng):
    assert expected_tests('gnu-crypto', 1024, model='exact') == pytest.approx(
        expected_tests('rsa-oaep', 1024, model='exact'), rel=0.02)
    params = StandardParams(k=64)
    results = [generate_standard('gnu-crypto', params, rng) for _ in range(300)]
    assert all(result.n.bit_length() == 64 for result in results)
    assert sum(result.region_rejections for result in results) > 0


def test_rsa_distribution_is_the_square():
    distribution = pair_distribution('rsa-oaep', StandardParams(k=16))
    assert len(distribution.probability) == count_exact('fix:r=2,sigma=0', 2 ** 16)
    assert distribution.probability.sum() == pytest.approx(1)
    assert np.ptp(distribution.probability) == pytest.approx(0)


def test_gnupg_restart_keeps_the_distribution_uniform():
    distribution = pair_distribution('gnupg', StandardParams(k=16))
    scheme = scheme_for('gnupg', StandardParams(k=16))
    assert all(scheme.admits(p, q) for p, q in zip(distribution.p.tolist(),
                                                    distribution.q.tolist()))
    assert np.ptp(distribution.probability) == pytest.approx(0)


@pytest.mark.parametrize('standard, low, high', [('ieee-1363', 1.5, 2.5),
                                               ('gnu-crypto', 2.5, math.inf)])
def test_two_stage_standards_are_not_uniform(standard, low, high):
    distribution = pair_distribution(standard, StandardParams(k=20))
    ratio = distribution.probability.max() / distribution.probability.min()
    assert low <= ratio <= high


def test_pair_limit():
    with pytest.raises(CapabilityError):
        pair_distribution('rsa-oaep', StandardParams(k=24), pair_limit=100)


def _sample(standard, params, rng, samples):
    results = [generate_standard(standard, params, rng) for _ in range(samples)]
    return np.array([result.p for result in results]), np.array([result.q for result in results])


@pytest.mark.parametrize('standard', ['rsa-oaep', 'nessie', 'openssl', 'openswan', 'gnupg'])
def test_generated_keys_follow_the_pair_distribution(standard, rng):
    params = StandardParams(k=20)
    distribution = pair_distribution(standard, params)
    p, q = _sample(standard, params, rng, 4000)
    for drawn, column in ((p, distribution.p), (q, distribution.q)):
        support, positions = np.unique(column, return_inverse=True)
        assert np.isin(drawn, support).all()
        expected = np.bincount(positions, weights=distribution.probability) * len(drawn)
        observed = np.bincount(np.searchsorted(support, drawn), minlength=len(support))
        _, p_value = stats.chisquare(observed, expected)
        assert p_value > 1e-4


@pytest.mark.parametrize('standard', ['ieee-1363', 'gnu-crypto'])
def test_measured_bias_matches_the_model(standard, rng):
    params = StandardParams(k=12)
    distribution = pair_distribution(standard, params)
    probability = distribution.probability
    p, q = _sample(standard, params, rng, 10000)
    drawn = Counter(zip(p.tolist(), q.tolist()))
    pairs = list(zip(distribution.p.tolist(), distribution.q.tolist()))
    frequent = [drawn[pair] for pair, weight in zip(pairs, probability)
                if math.isclose(weight, probability.max())]
    rare = [drawn[pair] for pair, weight in zip(pairs, probability)
            if math.isclose(weight, probability.min())]
    model = probability.max() / probability.min()
    assert model > 1.4
    assert np.mean(frequent) / np.mean(rare) == pytest.approx(model, rel=0.2)
