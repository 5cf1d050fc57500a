import argparse
import logging
import sys

from logic.errors import NotionError, ParameterError
from logic.notions import to_fraction
from pipeline.counting_report import COUNT_MODES, CountReporter
from pipeline.entropy_report import DEFAULT_TABLE_BITS, ENTROPY_METHODS, EntropyReporter
from pipeline.generation import METHODS, KeyGenerator
from utils import FORMATS, write_records

logger = logging.getLogger(__name__)


def parse_magnitude(text):
    """Read 300, 2^20, 1e9 or 1000/3 as an exact number."""
    text = str(text).strip()
    try:
        if '^' in text:
            base, exponent = text.split('^')
            return int(base) ** int(exponent)
        if 'e' in text.lower() and '/' not in text:
            value = float(text)
            if not value.is_integer():
                return to_fraction(text)
            return int(value)
        value = to_fraction(text)
    except ValueError as error:
        raise argparse.ArgumentTypeError(f'cannot read {text!r} as a number') from error
    return int(value) if value.denominator == 1 else value


def parse_bits(text):
    try:
        return [int(item) for item in str(text).split(',') if item.strip()]
    except ValueError as error:
        raise argparse.ArgumentTypeError(f'bit lengths must be integers, got {text!r}') from error


class _Parser(argparse.ArgumentParser):
    # Usage errors become parameter errors so that run() can return instead of exiting
    def error(self, message):
        raise ParameterError(f'{self.prog}: {message}')


def _source_arguments(parser):
    source = parser.add_mutually_exclusive_group(required=True)
    source.add_argument('--notion', help='notion spec, e.g. fix:r=2,sigma=1')
    source.add_argument('--standard', help='standard id, e.g. rsa-oaep')
    parser.add_argument('--x', type=parse_magnitude, help='bound x for a notion')
    parser.add_argument('--bits', type=int, help='bit length k (x = 2^k for a notion)')
    parser.add_argument('--e', type=int, help='public exponent for gcd(p - 1, e) = 1')


def build_parser():
    common = _Parser(add_help=False)
    common.add_argument('--config', help='YAML config file')
    common.add_argument('--seed', type=int, help='seed for every randomized path')
    common.add_argument('--format', choices=FORMATS, help='output format')
    common.add_argument('--n-jobs', type=int, help='workers for exact counting')
    common.add_argument('--verbose', action='store_true', help='debug logging to stderr')

    parser = _Parser(prog='notions', description='Notions of RSA integers: areas, counts, '
                                                 'key generation and output entropy.')
    commands = parser.add_subparsers(dest='command', required=True, parser_class=_Parser)

    area = commands.add_parser('area', parents=[common], help='area of a notion')
    area.add_argument('--notion', required=True)
    area.add_argument('--x', type=parse_magnitude, required=True)
    area.add_argument('--numeric', action='store_true', help='add the quadrature area')

    count = commands.add_parser('count', parents=[common], help='prime pairs in a notion')
    count.add_argument('--notion', required=True)
    count.add_argument('--x', type=parse_magnitude, required=True)
    count.add_argument('--mode', choices=COUNT_MODES, default='both')
    count.add_argument('--e', type=int)

    atilde = commands.add_parser('atilde', parents=[common], help='correction factor a_tilde')
    atilde.add_argument('--notion', required=True)
    atilde.add_argument('--x', type=parse_magnitude, required=True)

    gen = commands.add_parser('gen', parents=[common], help='generate moduli')
    _source_arguments(gen)
    gen.add_argument('--count', type=int, default=1)
    gen.add_argument('--method', choices=METHODS, default='inverse-transform')
    gen.add_argument('--marginal', choices=('continuous', 'exact'), default='continuous')
    gen.add_argument('--loop-order', choices=('membership_first', 'primality_first'),
                     default='membership_first')
    gen.add_argument('--order', choices=('gcd_first', 'primality_first'), default='gcd_first')

    entropy = commands.add_parser('entropy', parents=[common], help='output entropy')
    _source_arguments(entropy)
    entropy.add_argument('--method', choices=ENTROPY_METHODS, default='exact')
    entropy.add_argument('--generator', choices=('uniform', 'biased'), default='uniform')
    entropy.add_argument('--samples', type=int, default=10000)

    table = commands.add_parser('table', parents=[common], help='standards overview table')
    table.add_argument('--bits', type=parse_bits,
                       default=list(DEFAULT_TABLE_BITS), help='comma-separated bit lengths')

    audit = commands.add_parser('audit', parents=[common], help='chi-square uniformity audit')
    _source_arguments(audit)
    audit.add_argument('--samples', type=int, default=20000)
    audit.add_argument('--method', choices=METHODS, default='inverse-transform')
    audit.add_argument('--marginal', choices=('continuous', 'exact'), default='exact')
    audit.add_argument('--outer', action='store_true',
                       help='Kolmogorov-Smirnov test of the continuous first coordinate')

    enclosure = commands.add_parser('enclosure', parents=[common], help='enclosure chains')
    enclosure.add_argument('--x', type=parse_magnitude, required=True)
    enclosure.add_argument('--r', type=parse_magnitude, required=True)
    return parser


def _overrides(args):
    return {'control': {'default_seed': args.seed, 'n_jobs': args.n_jobs},
            'output': {'format': args.format}}


def _dispatch(args):
    # (runner, records, title, single document) for one subcommand
    options = {'config_path': args.config, 'overrides': _overrides(args)}
    command = args.command
    if command in ('area', 'count', 'atilde', 'enclosure'):
        runner = CountReporter(**options)
        if command == 'area':
            records = runner.area(args.notion, args.x, numeric=args.numeric)
        elif command == 'count':
            records = runner.count(args.notion, args.x, mode=args.mode, e=args.e)
        elif command == 'atilde':
            records = runner.atilde(args.notion, args.x)
        else:
            records = runner.enclosure(args.x, args.r)
        return runner, records, command, command == 'enclosure'

    if command == 'table':
        runner = EntropyReporter(**options)
        return runner, runner.table(args.bits), 'standards', True

    source = {'notion': args.notion, 'standard': args.standard, 'x': args.x, 'bits': args.bits}
    if command in ('gen', 'audit'):
        runner = KeyGenerator(**options)
        if command == 'gen':
            records = runner.gen(**source, count=args.count, method=args.method, e=args.e,
                                 marginal=args.marginal, loop_order=args.loop_order,
                                 order=args.order)
            return runner, records, 'moduli', False
        if args.outer:
            if args.notion is None or args.x is None:
                raise ParameterError('--outer needs --notion and --x')
            return runner, runner.outer_audit(args.notion, args.x, args.samples), 'audit', True
        records = runner.audit(**source, samples=args.samples, method=args.method, e=args.e,
                               marginal=args.marginal)
        return runner, records, 'audit', True

    runner = EntropyReporter(**options)
    records = runner.entropy(**source, method=args.method, generator=args.generator,
                             e=args.e, samples=args.samples)
    return runner, records, 'entropy', True


def _configure_logging(verbose):
    logging.basicConfig(stream=sys.stderr, force=True,
                        level=logging.DEBUG if verbose else logging.WARNING,
                        format='%(levelname)s %(name)s: %(message)s')


def run(argv=None, stdout=None):
    stdout = stdout or sys.stdout
    try:
        args = build_parser().parse_args(argv)
        _configure_logging(args.verbose)
        runner, records, title, document = _dispatch(args)
        float_format = '%.2f' if args.command == 'table' else None
        write_records(records, runner.output_format, stdout, title=title, document=document,
                      float_format=float_format)
    except NotionError as error:
        print(f'error: {error}', file=sys.stderr)
        return error.exit_code
    return 0


if __name__ == '__main__':
    sys.exit(run())
