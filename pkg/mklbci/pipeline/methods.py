from __future__ import annotations

import hashlib
import json
import math
import time
from dataclasses import dataclass, field
from functools import cached_property
from typing import Callable, Mapping, Sequence

import numpy as np

from mklbci.classifiers.kernels import (KernelStack, cross_kernel,
                                        kernel_stack)
from mklbci.classifiers.lda import lda_fit, lda_predict
from mklbci.classifiers.metrics import error_rate, predict_labels
from mklbci.classifiers.mkl import mkl_predict, mkl_train
from mklbci.classifiers.svm import svm_dual_solve
from mklbci.constants import METHODS
from mklbci.exception import ParameterError
from mklbci.logger import log
from mklbci.pipeline.folds import stratified_folds, train_indices
from mklbci.pipeline.session import Cohort
from mklbci.signal.filter import apply_filter, design_butterworth_bandpass
from mklbci.signal.recording import (Recording, Trial, epoch, labels_of,
                                     select_channels)
from mklbci.spatial.composite import (SimilarityWeights, alpha_row,
                                      fit_ccsp_from_covariances,
                                      per_class_weights)
from mklbci.spatial.csp import (ClassCovariances, FilterBank,
                                class_covariances, fit_csp)
from mklbci.spatial.features import feature_block, view_order
from mklbci.typing import Matrix, Method, SubjectId, Vector
from mklbci.utils.config import ExperimentConfig


def session_trials(rec: Recording, cfg: ExperimentConfig, *, limit: int = 0) -> list[Trial]:
    '''
    选取通道、带通滤波并切分试次

    ``limit > 0`` 时只保留 ``limit`` 个标记，各类别尽量各占一半（见 :meth:`~.Recording.truncated_markers`）
    '''
    if cfg.channels:
        rec = select_channels(rec, cfg.channels)
    band = design_butterworth_bandpass(cfg.filter_order, *cfg.band, rec.fs)
    rec = apply_filter(band, rec.truncated_markers(limit))
    return epoch(rec, *cfg.epoch_window_ms)


@dataclass(frozen=True)
class SubjectPrior:
    '''
    其他被试的先验知识：在其完整训练会话上得到的 CSP 滤波器组与两类协方差
    '''
    subject_id: SubjectId
    bank: FilterBank = field(repr=False)
    covs: ClassCovariances = field(repr=False)


def build_prior(subject_id: SubjectId, calibration: Recording, cfg: ExperimentConfig) -> SubjectPrior:
    covs = class_covariances(session_trials(calibration, cfg))
    return SubjectPrior(subject_id, fit_csp(covs.left, covs.right, subject_id), covs)


def build_priors(cohort: Cohort, cfg: ExperimentConfig) -> dict[SubjectId, SubjectPrior]:
    return {
        subject_id: build_prior(subject_id, sessions.calibration, cfg)
        for subject_id, sessions in sorted(cohort.items())
    }


@dataclass(frozen=True)
class GridPoint:
    C: float | None = None
    p: float | None = None
    lam: float | None = None

    def sort_key(self) -> tuple[float, float]:
        second = self.p if self.p is not None else self.lam
        return (
            0.0 if self.C is None else self.C,
            0.0 if second is None else second,
        )

    def to_dict(self) -> dict:
        return {
            'C': self.C,
            'p': None if self.p is None else ('inf' if math.isinf(self.p) else self.p),
            'lambda': self.lam,
        }


def method_grid(method: Method, cfg: ExperimentConfig) -> list[GridPoint]:
    '''
    各方法的超参数网格；cCSP 的 λ 与分类器的 C 联合搜索
    '''
    match method:
        case 'csp-lda':
            return [GridPoint()]
        case 'csp-svm':
            return [GridPoint(C=c) for c in cfg.c_grid]
        case 'ccsp-lda':
            return [GridPoint(lam=lam) for lam in cfg.lambda_grid]
        case 'ccsp-svm':
            return [GridPoint(C=c, lam=lam) for c in cfg.c_grid for lam in cfg.lambda_grid]
        case 'mkl':
            return [GridPoint(C=c, p=p) for c in cfg.c_grid for p in cfg.p_grid]
    raise ParameterError(f'未知的方法 {method!r}，可选的有 {list(METHODS)}')


class TrainingSet:
    '''
    目标被试的一份训练数据（某一折的训练部分，或完整的训练会话）

    目标被试的协方差、滤波器组、特征与核矩阵只由这份数据得到，并按需缓存
    '''
    def __init__(self, target: SubjectId, trials: Sequence[Trial], priors: Mapping[SubjectId, SubjectPrior]):
        self.target = target
        self.trials = list(trials)
        self.labels = labels_of(self.trials)
        self.others = {sid: prior for sid, prior in priors.items() if sid != target}
        self.covs = class_covariances(self.trials)
        self._banks: dict[float | None, FilterBank] = {}
        self._blocks: dict[int, Matrix] = {}
        self._stacks: dict[tuple[int, ...], KernelStack] = {}

    @cached_property
    def weights(self) -> dict[int, SimilarityWeights]:
        return per_class_weights(self.covs, {sid: prior.covs for sid, prior in self.others.items()}, self.target)

    def alphas(self) -> dict[SubjectId, float]:
        return alpha_row(self.weights) if self.others else {}

    def bank(self, lam: float | None = None) -> FilterBank:
        '''
        ``lam`` 为 ``None`` 时为普通 CSP，否则为 composite CSP
        '''
        if lam not in self._banks:
            if lam is None:
                bank = fit_csp(self.covs.left, self.covs.right, self.target)
            else:
                bank = fit_ccsp_from_covariances(
                    self.covs,
                    {sid: prior.covs for sid, prior in self.others.items()},
                    lam,
                    target=self.target,
                    weights=self.weights
                )
            self._banks[lam] = bank
        return self._banks[lam]

    def views(self) -> list[FilterBank]:
        '''
        目标被试自己的滤波器组在前，其余被试的按编号排序
        '''
        order = view_order(self.target, self.others)
        return [self.bank(), *(self.others[sid].bank for sid in order[1:])]

    def block(self, bank: FilterBank) -> Matrix:
        key = id(bank)
        if key not in self._blocks:
            self._blocks[key] = feature_block(bank, self.trials)
        return self._blocks[key]

    def stack(self, banks: Sequence[FilterBank]) -> KernelStack:
        key = tuple(id(bank) for bank in banks)
        if key not in self._stacks:
            self._stacks[key] = kernel_stack(
                [self.block(bank) for bank in banks],
                [bank.subject_id for bank in banks]
            )
        return self._stacks[key]


@dataclass
class Fitted:
    '''
    在一份训练数据上以某个超参数训练得到的模型，``decide`` 对新的试次给出决策值
    '''
    banks: list[FilterBank]
    decide_blocks: Callable[[list[Matrix]], Vector]
    betas: dict[SubjectId, float] | None = None

    def decide(self, trials: Sequence[Trial]) -> Vector:
        return self.decide_blocks([feature_block(bank, trials) for bank in self.banks])


def fit_point(method: Method, ts: TrainingSet, point: GridPoint, cfg: ExperimentConfig) -> Fitted:
    y = ts.labels
    match method:
        case 'csp-lda' | 'ccsp-lda':
            bank = ts.bank(point.lam)
            model = lda_fit(ts.block(bank), y, cfg.lda_gamma)
            return Fitted([bank], lambda blocks: lda_predict(model, blocks[0]))

        case 'csp-svm' | 'ccsp-svm':
            bank = ts.bank(point.lam)
            stack = ts.stack([bank])
            solution = svm_dual_solve(stack[0], y, point.C)
            train = ts.block(bank)
            return Fitted(
                [bank],
                lambda blocks: solution.decision(cross_kernel(train, blocks[0], stack[0].norm_factor))
            )

        case 'mkl':
            banks = ts.views()
            model = mkl_train(ts.stack(banks), y, point.C, point.p, train_blocks=[ts.block(b) for b in banks])
            betas = dict(zip(model.view_ids, model.report_betas().tolist()))
            return Fitted(banks, lambda blocks: mkl_predict(model, blocks), betas)

    raise ParameterError(f'未知的方法 {method!r}，可选的有 {list(METHODS)}')


@dataclass
class SubjectResult:
    '''
    一个目标被试在一种方法下的结果

    - ``error``: 测试会话上的错误率（没有测试会话时为 ``None``）
    - ``cv_error``: 所选超参数的交叉验证错误率
    - ``trace``: 交叉验证中每个网格点的错误率，``trace_hash`` 为其 SHA-256
    - ``betas``: 多核学习的核权重（视角编号 → β）
    - ``alphas``: 两类相似度权重的平均（其他被试编号 → α）
    '''
    subject_id: SubjectId
    method: Method
    error: float | None
    cv_error: float
    point: GridPoint
    trace: list[dict] = field(repr=False)
    trace_hash: str = ''
    betas: dict[SubjectId, float] | None = None
    alphas: dict[SubjectId, float] | None = None
    seconds: float = 0.0

    def to_dict(self) -> dict:
        return {
            'subject': self.subject_id,
            'method': self.method,
            'error': self.error,
            'cv_error': self.cv_error,
            **self.point.to_dict(),
            'trace': self.trace,
            'trace_hash': self.trace_hash,
            'betas': self.betas,
            'alphas': self.alphas,
            'seconds': self.seconds,
        }

    @staticmethod
    def from_dict(data: dict) -> SubjectResult:
        p = data['p']
        return SubjectResult(
            subject_id=data['subject'],
            method=data['method'],
            error=data['error'],
            cv_error=data['cv_error'],
            point=GridPoint(data['C'], None if p is None else float(p), data['lambda']),
            trace=data['trace'],
            trace_hash=data['trace_hash'],
            betas=data['betas'],
            alphas=data['alphas'],
            seconds=data['seconds'],
        )


def trace_digest(trace: list[dict]) -> str:
    canonical = json.dumps(trace, sort_keys=True, separators=(',', ':'))
    return hashlib.sha256(canonical.encode('utf-8')).hexdigest()


def cross_validate(
    method: Method,
    target: SubjectId,
    trials: Sequence[Trial],
    priors: Mapping[SubjectId, SubjectPrior],
    cfg: ExperimentConfig
) -> tuple[GridPoint, float, list[dict]]:
    '''
    在训练数据上进行分层 k 折交叉验证，返回所选的网格点、其错误率以及完整的选择记录

    每一折中目标被试的滤波器、特征与核归一化只由该折的训练部分得到；
    错误率取各折验证集上错误数之和除以试次总数，
    并列时取较小的 C，再取较小的 p 或 λ
    '''
    grid = method_grid(method, cfg)
    labels = labels_of(trials)
    n = len(trials)
    folds = stratified_folds(labels, cfg.folds, cfg.seed)

    mistakes = np.zeros(len(grid), dtype=np.int64)
    for k, held_out in enumerate(folds):
        ts = TrainingSet(target, [trials[i] for i in train_indices(folds, k, n)], priors)
        validation = [trials[i] for i in held_out]
        truth = labels[held_out]
        for g, point in enumerate(grid):
            predicted = predict_labels(fit_point(method, ts, point, cfg).decide(validation))
            mistakes[g] += int(np.count_nonzero(predicted != truth))

    errors = mistakes / n
    trace = [
        {'method': method, **point.to_dict(), 'cv_error': float(err)}
        for point, err in zip(grid, errors)
    ]
    best = min(range(len(grid)), key=lambda g: (errors[g], *grid[g].sort_key()))
    return grid[best], float(errors[best]), trace


def run_subject(
    method: Method,
    target: SubjectId,
    cohort: Cohort,
    cfg: ExperimentConfig | None = None,
    *,
    priors: Mapping[SubjectId, SubjectPrior] | None = None
) -> SubjectResult:
    '''
    对目标被试运行一种方法：

    1. 在训练会话上以交叉验证选取超参数
    2. 以所选超参数在完整的训练会话上重新训练
    3. 在测试会话上报告错误率

    其他被试的滤波器组与协方差只由它们各自的训练会话得到（可通过 ``priors`` 传入以避免重复计算）
    '''
    cfg = (cfg or ExperimentConfig()).resolved()
    if target not in cohort:
        raise ParameterError(f'被试 {target!r} 不在群体中')
    if method not in METHODS:
        raise ParameterError(f'未知的方法 {method!r}，可选的有 {list(METHODS)}')
    if priors is None:
        priors = build_priors({sid: s for sid, s in cohort.items() if sid != target}, cfg)

    start = time.perf_counter()
    sessions = cohort[target]
    trials = session_trials(sessions.calibration, cfg, limit=cfg.calibration_trials)

    point, cv_error, trace = cross_validate(method, target, trials, priors, cfg)

    full = TrainingSet(target, trials, priors)
    fitted = fit_point(method, full, point, cfg)

    error = None
    if sessions.test is not None:
        test_trials = session_trials(sessions.test, cfg)
        predicted = predict_labels(fitted.decide(test_trials))
        error = error_rate(predicted, labels_of(test_trials))

    elapsed = time.perf_counter() - start
    err_text = 'n/a' if error is None else f'{error:.3f}'
    log.debug(f'{target} {method}: cv={cv_error:.3f} test={err_text} {point} ({elapsed:.2f} s)')

    return SubjectResult(
        subject_id=target,
        method=method,
        error=error,
        cv_error=cv_error,
        point=point,
        trace=trace,
        trace_hash=trace_digest(trace),
        betas=fitted.betas,
        alphas=full.alphas() or None,
        seconds=elapsed,
    )
