import logging

import numpy as np

from logic.primes import PrimalityConfig, SideCondition
from utils import load_config

logger = logging.getLogger(__name__)


class Runner():
    def __init__(self, config_path=None, overrides=None):
        # General attributes
        self.config = load_config(config_path, overrides)
        control = self.config['control']
        self.sieve_limit = int(control['sieve_limit'])
        self.exact_count_limit = int(control['exact_count_limit'])
        self.seed = int(control['default_seed'])
        self.n_jobs = int(control['n_jobs'])
        self.retry_budget = int(control['retry_budget'])
        self.pair_limit = int(control['exact_entropy_pair_limit'])

        # Primality
        primality = self.config['primality']
        self.primality = PrimalityConfig(int(primality['deterministic_threshold']),
                                         int(primality['mr_rounds']))

        self.output_format = self.config['output']['format']
        logger.debug('config loaded: %s', self.config)

    @property
    def limits(self):
        return {'exact_count_limit': self.exact_count_limit, 'sieve_limit': self.sieve_limit}

    def rng(self, seed=None):
        return np.random.default_rng(self.seed if seed is None else seed)

    @staticmethod
    def condition(e=None):
        return SideCondition(e)
