from __future__ import annotations

from dataclasses import dataclass, field
from typing import Iterable, NamedTuple

import numpy as np
from scipy.linalg import cho_solve

from mklbci.constants import LEFT, N_FILTERS, N_FILTERS_PER_SIDE, RIGHT
from mklbci.exception import (DefinitenessError, DegenerateInputError,
                              ParameterError, ShapeMismatchError)
from mklbci.linalg.covariance import (CovMatrix, average_covariance,
                                      class_covariance)
from mklbci.linalg.eigen import cholesky_lower, gen_eig_sym
from mklbci.logger import log
from mklbci.signal.recording import Trial
from mklbci.typing import Matrix, MatrixLike, SubjectId, Vector

PATTERN_EPS = 1e-10


class ClassCovariances(NamedTuple):
    '''
    一个被试两类的协方差，``left`` 对应标签 +1，``right`` 对应标签 -1
    '''
    left: CovMatrix
    right: CovMatrix

    def of(self, label: int) -> CovMatrix:
        return self.left if label == LEFT else self.right

    def average(self) -> CovMatrix:
        return average_covariance(self.left, self.right)


def class_covariances(trials: Iterable[Trial]) -> ClassCovariances:
    trials = list(trials)
    left = [t for t in trials if t.label == LEFT]
    right = [t for t in trials if t.label == RIGHT]
    if not left or not right:
        raise DegenerateInputError(
            f'两类试次都必须存在，得到 +1: {len(left)} 个，-1: {len(right)} 个'
        )
    return ClassCovariances(class_covariance(left), class_covariance(right))


@dataclass(frozen=True, eq=False)
class FilterBank:
    '''
    一个被试的 CSP 空间滤波器组

    ``filters`` 为 通道 × 6 的矩阵，前 3 列对应最大的 3 个特征值，后 3 列对应最小的 3 个，
    ``eigenvalues`` 按相同的顺序存放这 6 个特征值
    '''
    subject_id: SubjectId
    filters: Matrix = field(repr=False)
    eigenvalues: Vector

    def __post_init__(self) -> None:
        filters = np.array(self.filters, dtype=np.float64)
        eigenvalues = np.array(self.eigenvalues, dtype=np.float64)
        if filters.ndim != 2 or filters.shape[1] != N_FILTERS:
            raise ShapeMismatchError(f'滤波器组必须是 通道 × {N_FILTERS} 的矩阵，得到的形状为 {filters.shape}')
        if eigenvalues.shape != (N_FILTERS,):
            raise ShapeMismatchError(f'滤波器组需要 {N_FILTERS} 个特征值，得到的形状为 {eigenvalues.shape}')
        if not np.all(np.isfinite(filters)):
            raise DegenerateInputError(f'被试 {self.subject_id} 的滤波器含有非有限值')
        filters.setflags(write=False)
        eigenvalues.setflags(write=False)
        object.__setattr__(self, 'filters', filters)
        object.__setattr__(self, 'eigenvalues', eigenvalues)

    @property
    def channels(self) -> int:
        return self.filters.shape[0]


def fit_csp(
    c1: CovMatrix | MatrixLike,
    c2: CovMatrix | MatrixLike,
    subject_id: SubjectId = ''
) -> FilterBank:
    '''
    求解 ``C1·w = λ·C2·w``，取最大的 3 个与最小的 3 个特征值所对应的滤波器

    ``c1`` 为标签 +1 的类别协方差，``c2`` 为标签 -1 的类别协方差
    '''
    c1 = CovMatrix.of(c1)
    c2 = CovMatrix.of(c2)
    if c1.channels < N_FILTERS:
        raise ParameterError(f'通道数 {c1.channels} 少于 {N_FILTERS}，无法各选取 {N_FILTERS_PER_SIDE} 个滤波器')

    result = gen_eig_sym(c1, c2)
    idx = [*range(N_FILTERS_PER_SIDE), *range(len(result) - N_FILTERS_PER_SIDE, len(result))]
    return FilterBank(subject_id, result.eigenvectors[:, idx], result.eigenvalues[idx])


def fit_csp_from_trials(trials: Iterable[Trial], subject_id: SubjectId = '') -> FilterBank:
    covs = class_covariances(trials)
    return fit_csp(covs.left, covs.right, subject_id)


def activity_patterns(bank: FilterBank, cavg: CovMatrix | MatrixLike) -> Matrix:
    '''
    与滤波器对应的激活模式 ``A = C·W·(Wᵀ·C·W)⁻¹``

    ``cavg`` 为两类协方差的平均；``Wᵀ·C·W`` 奇异时以 ``eps=1e-10`` 正则化并给出警告
    '''
    cavg = CovMatrix.of(cavg)
    if cavg.channels != bank.channels:
        raise ShapeMismatchError(f'协方差维度 {cavg.channels} 与滤波器通道数 {bank.channels} 不一致')

    cw = cavg.data @ bank.filters
    gram = bank.filters.T @ cw
    gram = (gram + gram.T) / 2
    try:
        lower = cholesky_lower(gram, 'WᵀCW')
    except DefinitenessError:
        log.warning(f'被试 {bank.subject_id} 的 WᵀCW 奇异，已使用 eps={PATTERN_EPS} 进行正则化')
        shift = PATTERN_EPS * max(np.mean(np.diag(gram)), 1.0)
        lower = cholesky_lower(gram + shift * np.eye(len(gram)), 'WᵀCW')

    return cho_solve((lower, True), cw.T).T
