import logging
from dataclasses import asdict

import numpy as np

from logic.entropy import (entropy_analytic, entropy_exact, entropy_monte_carlo,
                           table_report)
from logic.errors import ParameterError
from logic.standards import notion_of
from pipeline.generation import make_sampler, resolve_source
from pipeline.runner import Runner
from utils import round_or_none

logger = logging.getLogger(__name__)

ENTROPY_METHODS = ('exact', 'analytic', 'monte-carlo')
DEFAULT_TABLE_BITS = (768, 1024, 2048)


class EntropyReporter(Runner):
    def entropy(self, notion=None, standard=None, x=None, bits=None, method='exact',
                generator='uniform', e=None, samples=10000, seed=None, fips_aux_bits=None):
        if method not in ENTROPY_METHODS:
            raise ParameterError(f'method must be one of {ENTROPY_METHODS}, got {method!r}')
        spec, standard_id, x_value = resolve_source(notion, standard, x, bits)
        source = standard_id if standard_id is not None else spec
        cond = self.condition(e)

        if method == 'exact':
            report = entropy_exact(source, k=bits, x=x_value, cond=cond, generator=generator,
                                   fips_aux_bits=fips_aux_bits, sieve_limit=self.sieve_limit,
                                   exact_count_limit=self.exact_count_limit,
                                   pair_limit=self.pair_limit)
        elif method == 'analytic':
            report = entropy_analytic(source, k=bits, x=x_value, cond=cond, generator=generator)
        else:
            sampler_method = 'biased' if generator == 'biased' else 'inverse-transform'
            sampler = make_sampler(self, notion, standard, x, bits, sampler_method, e,
                                   fips_aux_bits=fips_aux_bits)
            rng = self.rng(seed)
            draws = [sampler(rng) for _ in range(samples)]
            convention = notion_of(standard_id, bits).convention if standard_id else 'pairs'
            report = entropy_monte_carlo(np.array([draw.p for draw in draws], dtype=object),
                                         np.array([draw.q for draw in draws], dtype=object),
                                         convention)

        label = source.value if standard_id is not None else str(spec)
        return [{'source': label, 'k': bits, 'x': x_value, **asdict(report),
                 'entropy_bits': report.entropy_bits}]

    def table(self, bits=DEFAULT_TABLE_BITS):
        rows = table_report(list(bits))
        for row in rows:
            row['entropy_bits'] = round_or_none(row['entropy_bits'])
            row['loss_permille'] = round_or_none(row['loss_permille'])
        return rows
