import json
import time
from argparse import Namespace
from functools import wraps

from mklbci.exception import (ConfigError, ExitException, MklBciException,
                              exit_code_of)
from mklbci.logger import log
from mklbci.pipeline.benchmark import run_benchmark
from mklbci.pipeline.methods import session_trials
from mklbci.pipeline.report import emit_reports, load_report
from mklbci.pipeline.session import load_cohort, save_cohort, validate_session
from mklbci.synth.cohort import (CohortSpec, bayes_reference_error,
                                 generate_cohort, save_spec)
from mklbci.utils.config import ExperimentConfig


def exits_on_error(func):
    '''
    把库中的异常转换为对应退出码的 :class:`~.ExitException`
    '''
    @wraps(func)
    def wrapper(args: Namespace) -> None:
        try:
            func(args)
        except MklBciException as e:
            if isinstance(e, ExitException):
                raise
            log.error(f'{type(e).__name__}: {e}')
            raise ExitException(exit_code_of(e)) from e

    return wrapper


@exits_on_error
def synth(args: Namespace) -> None:
    spec = CohortSpec.from_json(args.spec) if args.spec else CohortSpec()
    if args.seed is not None:
        spec.seed = args.seed

    log.info('======')
    cohort = generate_cohort(spec, workers=ExperimentConfig.get.workers)
    save_cohort(cohort, args.out)
    save_spec(spec, list(cohort), args.out)
    log.info(f'output_dir="{args.out}"')

    log.info('======')
    cfg = ExperimentConfig().resolved()
    for subject_id, subject in cohort.items():
        if not subject.test.markers:
            continue
        error = bayes_reference_error(subject.model, session_trials(subject.test, cfg))
        log.info(f'{subject_id} ({subject.model.group}): bayes reference error {error:.3f}')
    log.info('======')


def modify_config(cfg: ExperimentConfig, overrides: list[tuple[str, str]] | None) -> ExperimentConfig:
    if not overrides:
        return cfg
    data = cfg.to_dict()
    for key, value in overrides:
        try:
            data[key] = json.loads(value)
        except json.JSONDecodeError:
            data[key] = value
    return ExperimentConfig.from_dict(data)


@exits_on_error
def run(args: Namespace) -> None:
    cfg = ExperimentConfig.from_json(args.config) if args.config else ExperimentConfig()
    cfg = modify_config(cfg, args.overrides)
    if args.methods:
        methods = tuple(m.strip() for m in args.methods.split(',') if m.strip())
        if not methods:
            raise ConfigError('--methods 不能为空')
        cfg.methods = methods
    cfg.validate()

    cohort = load_cohort(args.cohort)
    report = run_benchmark(cohort, cfg)

    log.info('======')
    emit_reports(report, args.out)
    if report.failures:
        log.warning(f'{len(report.failures)} failure(s), see report.json')
    log.info('======')


@exits_on_error
def report(args: Namespace) -> None:
    t = time.time()
    loaded = load_report(args.in_dir)
    emit_reports(loaded, args.out or args.in_dir)
    log.info(f'Finished re-emitting reports in {time.time() - t:.2f} s')


@exits_on_error
def validate(args: Namespace) -> None:
    validate_session(args.session)
