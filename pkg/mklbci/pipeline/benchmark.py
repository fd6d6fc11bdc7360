from __future__ import annotations

import time
from concurrent.futures import ThreadPoolExecutor, as_completed
from dataclasses import dataclass, field

import numpy as np
import pandas as pd
from tqdm import tqdm

from mklbci.constants import BASELINE_METHODS, METHODS
from mklbci.exception import MklBciException, ParameterError
from mklbci.logger import log
from mklbci.pipeline.methods import (SubjectPrior, SubjectResult, build_prior,
                                     run_subject)
from mklbci.pipeline.session import Cohort
from mklbci.spatial.csp import activity_patterns
from mklbci.typing import Method, SubjectId
from mklbci.utils.config import ExperimentConfig


@dataclass
class PatternEntry:
    '''
    某个被试（完整训练会话上的）滤波器组所对应的激活模式，``patterns`` 为 通道 × 6
    '''
    role: str
    subject_id: SubjectId
    channel_names: list[str]
    patterns: np.ndarray = field(repr=False)

    def to_dict(self) -> dict:
        return {
            'role': self.role,
            'subject': self.subject_id,
            'channel_names': self.channel_names,
            'patterns': self.patterns.tolist(),
        }

    @staticmethod
    def from_dict(data: dict) -> PatternEntry:
        return PatternEntry(data['role'], data['subject'], data['channel_names'], np.array(data['patterns']))


@dataclass
class ExperimentReport:
    '''
    一次完整实验的结果

    - ``results``: 每个 目标被试 × 方法 的结果，按被试编号与方法顺序排列
    - ``failures``: 失败的 ``(被试, 方法)`` 及其错误信息，方法为 ``'*'`` 表示整个被试失败
    - ``patterns``: β 平均值最大与最小的被试的激活模式
    - ``config``: 所使用的（完整的）配置
    '''
    subjects: list[SubjectId]
    methods: list[Method]
    results: list[SubjectResult] = field(default_factory=list)
    failures: list[tuple[SubjectId, str, str]] = field(default_factory=list)
    patterns: list[PatternEntry] = field(default_factory=list)
    config: dict = field(default_factory=dict)
    seconds: float = 0.0

    def result(self, subject_id: SubjectId, method: Method) -> SubjectResult | None:
        for res in self.results:
            if res.subject_id == subject_id and res.method == method:
                return res
        return None

    def error_table(self) -> pd.DataFrame:
        columns = ['subject', 'method', 'error', 'cv_error', 'C', 'p', 'lambda']
        rows = [
            [res.subject_id, res.method, res.error, res.cv_error, res.point.C, res.point.p, res.point.lam]
            for res in self.results
        ]
        return pd.DataFrame(rows, columns=columns)

    def beta_rows(self) -> pd.DataFrame:
        '''
        多核学习的 β 矩阵（目标被试 × 视角被试），对角线未置零
        '''
        rows = {
            res.subject_id: res.betas
            for res in self.results
            if res.method == 'mkl' and res.betas is not None
        }
        return self._square(rows)

    def alpha_rows(self) -> pd.DataFrame:
        '''
        相似度 α 矩阵（目标被试 × 其他被试），对角线为 0
        '''
        rows: dict[SubjectId, dict[SubjectId, float]] = {}
        for res in self.results:
            if res.alphas and res.subject_id not in rows:
                rows[res.subject_id] = res.alphas
        return self._square(rows)

    def beta_matrix(self) -> pd.DataFrame:
        return self._zero_diagonal(self.beta_rows())

    def alpha_matrix(self) -> pd.DataFrame:
        return self._zero_diagonal(self.alpha_rows())

    def _square(self, rows: dict[SubjectId, dict[SubjectId, float]]) -> pd.DataFrame:
        targets = [sid for sid in self.subjects if sid in rows]
        data = [[float(rows[t].get(sid, 0.0)) for sid in self.subjects] for t in targets]
        frame = pd.DataFrame(data, index=targets, columns=self.subjects, dtype=np.float64)
        frame.index.name = 'subject'
        return frame

    @staticmethod
    def _zero_diagonal(frame: pd.DataFrame) -> pd.DataFrame:
        frame = frame.copy()
        for sid in frame.index:
            frame.loc[sid, sid] = 0.0
        return frame

    def average_betas(self) -> pd.Series:
        '''
        每个被试作为其他被试时在各目标被试中得到的平均 β
        '''
        rows = self.beta_rows()
        means = {}
        for sid in rows.columns:
            values = [rows.loc[t, sid] for t in rows.index if t != sid]
            if values:
                means[sid] = float(np.mean(values))
        return pd.Series(means, dtype=np.float64)

    def scatter_points(self, baseline: Method) -> list[tuple[SubjectId, float, float]]:
        '''
        横坐标为基线方法的测试错误率，纵坐标为多核学习的测试错误率
        '''
        points = []
        for sid in self.subjects:
            base = self.result(sid, baseline)
            mkl = self.result(sid, 'mkl')
            if base is None or mkl is None or base.error is None or mkl.error is None:
                continue
            points.append((sid, base.error, mkl.error))
        return points

    def to_dict(self) -> dict:
        return {
            'subjects': self.subjects,
            'methods': self.methods,
            'results': [res.to_dict() for res in self.results],
            'failures': [list(f) for f in self.failures],
            'patterns': [entry.to_dict() for entry in self.patterns],
            'config': self.config,
            'seconds': self.seconds,
        }

    @staticmethod
    def from_dict(data: dict) -> ExperimentReport:
        return ExperimentReport(
            subjects=list(data['subjects']),
            methods=list(data['methods']),
            results=[SubjectResult.from_dict(res) for res in data['results']],
            failures=[tuple(f) for f in data['failures']],
            patterns=[PatternEntry.from_dict(entry) for entry in data['patterns']],
            config=data['config'],
            seconds=data['seconds'],
        )


def _prior_or_failure(subject_id: SubjectId, cohort: Cohort, cfg: ExperimentConfig):
    try:
        return build_prior(subject_id, cohort[subject_id].calibration, cfg), None
    except MklBciException as e:
        return None, f'{type(e).__name__}: {e}'


def _run_target(
    target: SubjectId,
    methods: list[Method],
    cohort: Cohort,
    cfg: ExperimentConfig,
    priors: dict[SubjectId, SubjectPrior]
) -> tuple[list[SubjectResult], list[tuple[SubjectId, str, str]]]:
    results, failures = [], []
    for method in methods:
        try:
            results.append(run_subject(method, target, cohort, cfg, priors=priors))
        except MklBciException as e:
            log.warning(f'Subject {target} failed on {method}: {type(e).__name__}: {e}')
            failures.append((target, method, f'{type(e).__name__}: {e}'))
    return results, failures


def select_patterns(
    report: ExperimentReport,
    priors: dict[SubjectId, SubjectPrior],
    channel_names: dict[SubjectId, list[str]]
) -> list[PatternEntry]:
    '''
    选出平均 β 最大与最小的被试，计算其激活模式
    '''
    averages = report.average_betas()
    averages = averages[[sid in priors for sid in averages.index]]
    if averages.empty:
        return []

    entries = []
    # stable choice under ties: first subject id in sorted order
    ordered = averages.sort_index()
    for role, sid in (('most', ordered.idxmax()), ('least', ordered.idxmin())):
        prior = priors[sid]
        patterns = activity_patterns(prior.bank, prior.covs.average())
        entries.append(PatternEntry(role, sid, channel_names[sid], patterns))
    return entries


def run_benchmark(cohort: Cohort, cfg: ExperimentConfig | None = None) -> ExperimentReport:
    '''
    对群体中每个目标被试运行所有方法，并汇总为 :class:`ExperimentReport`

    - 其他被试的滤波器组与协方差只计算一次（由各自完整的训练会话得到）
    - 目标被试之间并行计算（``workers`` 个线程）
    - 某个被试或方法失败时记录下来并继续
    '''
    cfg = (cfg or ExperimentConfig()).resolved()
    cfg.validate()
    if len(cohort) < 2:
        raise ParameterError(f'群体中至少需要 2 个被试，得到 {len(cohort)} 个')

    subjects = sorted(cohort)
    methods = [m for m in METHODS if m in cfg.methods]

    log.info('======')
    log.info(f'Running benchmark: {len(subjects)} subjects × {len(methods)} methods')
    start = time.perf_counter()

    priors: dict[SubjectId, SubjectPrior] = {}
    failures: list[tuple[SubjectId, str, str]] = []
    for sid in subjects:
        prior, failure = _prior_or_failure(sid, cohort, cfg)
        if prior is None:
            log.warning(f'Subject {sid} failed: {failure}')
            failures.append((sid, '*', failure))
        else:
            priors[sid] = prior

    targets = [sid for sid in subjects if sid in priors]
    results: list[SubjectResult] = []
    with ThreadPoolExecutor(max_workers=cfg.workers) as executor:
        futures = [
            executor.submit(_run_target, target, methods, cohort, cfg, priors)
            for target in targets
        ]
        for future in tqdm(
            as_completed(futures),
            total=len(futures),
            desc='Benchmark',
            leave=False,
            dynamic_ncols=True
        ):
            res, fail = future.result()
            results.extend(res)
            failures.extend(fail)

    order = {m: i for i, m in enumerate(METHODS)}
    results.sort(key=lambda res: (res.subject_id, order[res.method]))
    failures.sort(key=lambda f: (f[0], f[1]))

    report = ExperimentReport(
        subjects=subjects,
        methods=methods,
        results=results,
        failures=failures,
        config=cfg.to_dict(),
    )

    channel_names = {
        sid: list(cfg.channels) if cfg.channels else list(cohort[sid].calibration.channel_names)
        for sid in subjects
    }
    report.patterns = select_patterns(report, priors, channel_names)

    report.seconds = time.perf_counter() - start
    log.info(f'Finished benchmark in {report.seconds:.2f} s')
    for baseline in BASELINE_METHODS:
        points = report.scatter_points(baseline)
        if points:
            wins = sum(y <= x for _, x, y in points)
            mean_x = np.mean([x for _, x, _ in points])
            mean_y = np.mean([y for _, _, y in points])
            log.info(
                f'mkl vs {baseline}: mean error {mean_y:.3f} vs {mean_x:.3f}, '
                f'mkl better or equal on {wins}/{len(points)} subjects'
            )
    return report
