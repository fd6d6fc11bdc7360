import sys
from argparse import ArgumentParser, Namespace

from mklbci.constants import METHODS
from mklbci.exception import EXITCODE_USAGE, ExitException
from mklbci.logger import log


class _ArgumentParser(ArgumentParser):
    def error(self, message: str):
        self.print_usage(sys.stderr)
        log.error(message)
        raise ExitException(EXITCODE_USAGE)


def main(argv: list[str] | None = None) -> None:
    parser = _ArgumentParser(description='Multi-subject CSP and multiple kernel learning for motor-imagery EEG')
    parser.set_defaults(func=None)

    parser.add_argument(
        '-v', '--version',
        action='store_true'
    )

    sp = parser.add_subparsers()
    synth_parser(sp.add_parser('synth', help='Generate a synthetic multi-subject cohort'))
    run_parser(sp.add_parser('run', help='Run the cross-subject benchmark on a cohort'))
    report_parser(sp.add_parser('report', help='Re-emit report files from stored results'))
    validate_parser(sp.add_parser('validate', help='Check a session file'))

    args = parser.parse_args(argv)

    if args.version:
        from mklbci import __version__
        print(f'mklbci {__version__}')

    if args.func is None:
        if not args.version:
            parser.print_help()
        return

    args.func(args)


def synth_parser(parser: ArgumentParser) -> None:
    parser.add_argument(
        '--spec',
        help='Path to cohort.json holding the cohort parameters'
    )
    parser.add_argument(
        '--out',
        required=True,
        help='Directory to write the sessions to'
    )
    parser.add_argument(
        '--seed',
        type=int,
        help='Override the seed of the cohort spec'
    )
    parser.set_defaults(func=synth)


def run_parser(parser: ArgumentParser) -> None:
    parser.add_argument(
        '--cohort',
        required=True,
        help='Directory holding the sessions of the cohort'
    )
    parser.add_argument(
        '--config',
        help='Path to config.json'
    )
    parser.add_argument(
        '--methods',
        help=f'Comma separated method arms, from {",".join(METHODS)}'
    )
    parser.add_argument(
        '--out',
        required=True,
        help='Directory to write the reports to'
    )
    parser.add_argument(
        '-c', '--set',
        nargs=2,
        metavar=('key', 'value'),
        action='append',
        dest='overrides',
        help='Override config, the value is parsed as JSON'
    )
    parser.set_defaults(func=run)


def report_parser(parser: ArgumentParser) -> None:
    parser.add_argument(
        '--in',
        dest='in_dir',
        required=True,
        help='Directory holding report.json'
    )
    parser.add_argument(
        '--out',
        help='Directory to write the reports to, defaults to the input directory'
    )
    parser.set_defaults(func=report)


def validate_parser(parser: ArgumentParser) -> None:
    parser.add_argument(
        '--session',
        required=True,
        help='Path to <name>.eegmeta.json (or <name>)'
    )
    parser.set_defaults(func=validate)


def synth(args: Namespace) -> None:
    from mklbci.cli import synth
    synth(args)


def run(args: Namespace) -> None:
    from mklbci.cli import run
    run(args)


def report(args: Namespace) -> None:
    from mklbci.cli import report
    report(args)


def validate(args: Namespace) -> None:
    from mklbci.cli import validate
    validate(args)


if __name__ == '__main__':
    main()
