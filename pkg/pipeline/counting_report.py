import logging
import math

from logic.counting import (a_tilde_numeric, count_exact, count_main_term,
                            count_products_exact, enclosure_check)
from logic.errors import ParameterError
from logic.notions import (area, area_factor, area_numeric, balance, classify_symmetry,
                           compile_region, parse_notion, region_bounds)
from pipeline.runner import Runner

logger = logging.getLogger(__name__)

COUNT_MODES = ('exact', 'analytic', 'both')
ANALYTIC_FIELDS = ('analytic', 'a_tilde', 'bracket', 'error_magnitude', 'log2_analytic',
                   'log2_error_magnitude', 'log2_explicit_error_bound', 'explicit_bound_valid')


class CountReporter(Runner):
    def area(self, notion, x, numeric=False):
        spec = parse_notion(notion)
        bounds = region_bounds(spec, x)
        record = {'notion': str(spec),
                  'label': spec.label,
                  'x': bounds.x,
                  'area': area(spec, x),
                  'area_factor': area_factor(spec, x),
                  'symmetry': classify_symmetry(spec).value,
                  'empty': bounds.is_empty}
        if not bounds.is_empty:
            params = balance(spec, x)
            record.update(b1=bounds.b1, c1_outer=bounds.c1_outer, c1=params.c1, c2=params.c2)
        if numeric:
            record['area_numeric'] = area_numeric(spec, x)
        return [record]

    def count(self, notion, x, mode='both', e=None):
        if mode not in COUNT_MODES:
            raise ParameterError(f'mode must be one of {COUNT_MODES}, got {mode!r}')
        spec = parse_notion(notion)
        cond = self.condition(e)
        region = compile_region(spec, x)
        record = {'spec': str(spec), 'x': region.x, 'e': e}

        if mode in ('exact', 'both'):
            record['exact'] = count_exact(spec, x, cond, n_jobs=self.n_jobs, **self.limits)
            record['products_exact'] = count_products_exact(spec, x, cond, n_jobs=self.n_jobs,
                                                            **self.limits)
        if mode in ('analytic', 'both'):
            record.update(dict.fromkeys(ANALYTIC_FIELDS))
            record['analytic'] = 0.0
            if not region.empty:
                estimate = count_main_term(spec, x, cond)
                record.update(analytic=estimate.main_term,
                              a_tilde=estimate.a_tilde,
                              bracket=list(estimate.a_tilde_bracket),
                              error_magnitude=estimate.error_bound_magnitude,
                              log2_analytic=estimate.log2_main_term,
                              log2_error_magnitude=estimate.log2_error_bound,
                              log2_explicit_error_bound=estimate.log2_explicit_error_bound,
                              explicit_bound_valid=estimate.explicit_bound_valid)
        if mode == 'both':
            analytic = record['analytic']
            record['ratio'] = (record['exact'] / analytic
                               if analytic and math.isfinite(analytic) else None)
        logger.info('%s at x=%s counted', spec.label, region.x)
        return [record]

    def atilde(self, notion, x):
        spec = parse_notion(notion)
        value = a_tilde_numeric(spec, x)
        params = balance(spec, x)
        low, high = 1 / (4 * params.c2 ** 2), 1 / (4 * params.c1 ** 2)
        return [{'notion': str(spec), 'x': compile_region(spec, x).x, 'a_tilde': value,
                 'bracket_low': low, 'bracket_high': high, 'c1': params.c1, 'c2': params.c2,
                 'within_bracket': low <= value <= high}]

    def enclosure(self, x, r):
        report = enclosure_check(x, r, n_jobs=self.n_jobs, **self.limits)
        return [{'chain': step.chain, 'smaller': step.smaller, 'larger': step.larger,
                 'smaller_count': step.smaller_count, 'larger_count': step.larger_count,
                 'holds': step.holds}
                for step in report.steps]
