import math

import numpy as np
import pytest

from logic.entropy import (biased_loss_bits, entropy_analytic, entropy_exact,
                           entropy_monte_carlo, epsilon_from_probabilities,
                           loss_bound_from_ratio, probability_ratio, product_entropy_bounds,
                           table_report)
from logic.errors import CapabilityError, EmptyRegionError, ParameterError
from logic.standards import StandardParams, generate_standard, pair_distribution

TABLE = {'RSA-OAEP': (747.34, 1002.51, 2024.51),
         'FIPS 186-3': (747.34, 1002.51, 2024.51),
         'GnuPG': (748.52, 1003.69, 2025.69),
         'OpenSSL': (749.89, 1005.06, 2027.06),
         'IEEE 1363-2000': (749.33, 1004.50, 2026.50)}
LOOSE = {'NESSIE': (749.89, 1005.06, 2027.06),
         'Openswan': (749.89, 1005.06, 2027.06),
         'GNU Crypto': (747.89, 1003.06, 2025.06)}
BITS = (768, 1024, 2048)


@pytest.fixture(scope='module')
def table_rows():
    return {(row['standard'], row['k']): row for row in table_report(BITS)}


def test_small_notion_entropies():
    report = entropy_exact('fix:r=2,sigma=1', x=300)
    assert report.support_size == 8
    assert report.pair_entropy_bits == pytest.approx(3)
    assert report.product_entropy_bits == pytest.approx(2.25)
    assert report.loss_bits == pytest.approx(0, abs=1e-12)
    assert report.chain_rule_gap < 1e-10
    assert report.entropy_bits == report.pair_entropy_bits


def test_products_convention():
    report = entropy_exact('fix:r=2,sigma=1', x=300, convention='products')
    assert report.entropy_bits == pytest.approx(2.25)
    with pytest.raises(ParameterError):
        entropy_exact('fix:r=2,sigma=1', x=300, convention='moduli')


@pytest.mark.parametrize('notion', ['alg:r=2', 'fix:r=2,sigma=1', 'dm:r=2'])
def test_uniform_generator_has_maximal_entropy(notion):
    report = entropy_exact(notion, x=2 ** 20)
    assert report.pair_entropy_bits == pytest.approx(math.log2(report.support_size))
    low, high = product_entropy_bounds(report.pair_entropy_bits)
    assert low - 1e-9 <= report.product_entropy_bits <= high + 1e-9


@pytest.mark.parametrize('notion', ['alg:r=2', 'fix:r=2,sigma=1'])
def test_biased_generator_loses_little(notion):
    uniform = entropy_exact(notion, x=2 ** 26)
    biased = entropy_exact(notion, x=2 ** 26, generator='biased')
    assert biased.support_size == uniform.support_size
    assert 0 < biased.loss_bits < 0.1
    assert biased.pair_entropy_bits < uniform.pair_entropy_bits
    assert biased.chain_rule_gap < 1e-8


@pytest.mark.parametrize('notion', ['alg:r=2', 'fix:r=2,sigma=1'])
def test_biased_loss_matches_enumeration(notion):
    exact = entropy_exact(notion, x=2 ** 30, generator='biased')
    assert biased_loss_bits(notion, 2 ** 30) == pytest.approx(exact.loss_bits, abs=0.01)


def test_biased_loss_of_alg():
    # uniform first prime, second prime count falling like 1/y
    expected = math.log2(2 * math.log(2)) - (1 - math.log(2)) / math.log(2)
    assert biased_loss_bits('alg:r=2', 2 ** 1024) == pytest.approx(expected, abs=2e-3)


def test_biased_loss_vanishes_on_squares():
    assert biased_loss_bits('fix:r=2,sigma=0', 2 ** 768) == pytest.approx(0, abs=1e-6)


def test_biased_loss_of_empty_region():
    with pytest.raises(EmptyRegionError):
        biased_loss_bits('max:r=2,c1=0.5', 2 ** 40)


@pytest.mark.parametrize('standard', ['rsa-oaep', 'nessie', 'openssl', 'openswan', 'gnupg'])
def test_uniform_standards_lose_nothing(standard):
    report = entropy_exact(standard, k=20)
    assert report.loss_bits <= 1e-6


@pytest.mark.parametrize('standard', ['ieee-1363', 'gnu-crypto'])
def test_two_stage_standards_lose_some(standard):
    report = entropy_exact(standard, k=20)
    assert 0 < report.loss_bits < 0.7


def test_exact_enumeration_limits():
    with pytest.raises(CapabilityError):
        entropy_exact('rsa-oaep', k=64)
    with pytest.raises(CapabilityError):
        entropy_exact('alg:r=2', x=2 ** 64)
    with pytest.raises(CapabilityError):
        entropy_exact('alg:r=2', k=20, pair_limit=10)
    with pytest.raises(ParameterError):
        entropy_exact('rsa-oaep')
    with pytest.raises(ParameterError):
        entropy_exact('alg:r=2', x=2 ** 20, generator='skewed')


def test_exact_entropy_of_empty_support():
    with pytest.raises(EmptyRegionError):
        entropy_exact('fix:r=2,sigma=1', x=3)


def test_analytic_agrees_with_enumeration():
    exact = entropy_exact('fix:r=2,sigma=1', x=2 ** 30)
    analytic = entropy_analytic('fix:r=2,sigma=1', x=2 ** 30)
    assert analytic.pair_entropy_bits == pytest.approx(exact.pair_entropy_bits, abs=0.1)
    assert analytic.product_entropy_bits == pytest.approx(analytic.pair_entropy_bits - 1)


@pytest.mark.parametrize('name, values', TABLE.items())
def test_table_values(name, values, table_rows):
    rows = table_rows
    for k, value in zip(BITS, values):
        assert rows[(name, k)]['entropy_bits'] == pytest.approx(value, abs=0.02)


@pytest.mark.parametrize('name, values', LOOSE.items())
def test_table_values_up_to_convention(name, values, table_rows):
    rows = table_rows
    for k, value in zip(BITS, values):
        assert rows[(name, k)]['entropy_bits'] == pytest.approx(value, abs=1.1)


def test_table_losses(table_rows):
    rows = table_rows
    ieee = [round(rows[('IEEE 1363-2000', k)]['loss_permille'], 2) for k in BITS]
    assert ieee == [0.04, 0.03, 0.01]
    gnu = [rows[('GNU Crypto', k)]['loss_permille'] for k in BITS]
    assert gnu == pytest.approx([0.84, 0.62, 0.31], rel=0.3)
    assert rows[('RSA-OAEP', 768)]['loss_permille'] == 0
    assert entropy_analytic('ieee-1363', 768).loss_bits == pytest.approx(0.0286, abs=2e-3)


def test_table_layout():
    rows = table_report([768])
    assert [row['standard'] for row in rows[:3]] == ['PKCS#1', 'ISO 18033-2', 'ANSI X9.44']
    assert all(row['entropy_bits'] is None for row in rows[:3])
    assert len(rows) == 11
    assert {row['notion'] for row in rows if row['standard'] == 'RSA-OAEP'} == {'fix:r=2,sigma=0'}


def test_analytic_needs_cryptographic_sizes():
    with pytest.raises(ParameterError):
        entropy_analytic('rsa-oaep', 32)


def test_monte_carlo_matches_exact_for_a_small_notion(pair_oracle, rng):
    support = pair_oracle('fix:r=2,sigma=1', 300)
    picks = rng.integers(len(support), size=20000)
    p = [support[index][0] for index in picks]
    q = [support[index][1] for index in picks]
    report = entropy_monte_carlo(p, q)
    assert report.support_size == 8
    assert report.pair_entropy_bits == pytest.approx(3, abs=0.01)
    assert report.product_entropy_bits == pytest.approx(2.25, abs=0.01)


def test_monte_carlo_of_generated_keys(rng):
    params = StandardParams(k=16)
    keys = [generate_standard('rsa-oaep', params, rng) for _ in range(2000)]
    report = entropy_monte_carlo([key.p for key in keys], [key.q for key in keys],
                                 convention='products')
    exact = entropy_exact('rsa-oaep', k=16)
    assert report.pair_entropy_bits == pytest.approx(exact.pair_entropy_bits, abs=0.1)
    assert report.entropy_bits == report.product_entropy_bits


def test_monte_carlo_needs_samples():
    with pytest.raises(ParameterError):
        entropy_monte_carlo([], [])


def test_product_entropy_bounds():
    assert product_entropy_bounds(0.5) == (0.0, 0.5)
    assert product_entropy_bounds(10) == (9, 10)
    with pytest.raises(ParameterError):
        product_entropy_bounds(-1)


def test_epsilon_and_ratio():
    uniform = np.full(16, 1 / 16)
    assert epsilon_from_probabilities(uniform) == pytest.approx(0)
    skewed = np.array([2, 1, 1, 0]) / 4
    assert epsilon_from_probabilities(skewed) == pytest.approx(math.log2(2 / 4 * 3))
    assert probability_ratio(skewed) == 2
    assert loss_bound_from_ratio(0.25) == 0.25
    with pytest.raises(ParameterError):
        loss_bound_from_ratio(-0.1)
    with pytest.raises(ParameterError):
        epsilon_from_probabilities([0, 0])


def test_loss_stays_below_epsilon():
    distribution = pair_distribution('ieee-1363', StandardParams(k=20))
    epsilon = epsilon_from_probabilities(distribution.probability)
    assert entropy_exact('ieee-1363', k=20).loss_bits <= loss_bound_from_ratio(epsilon) + 1e-12
