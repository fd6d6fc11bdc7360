from __future__ import annotations

from dataclasses import dataclass, field
from typing import Iterable, Mapping

import numpy as np

from mklbci.constants import KL_FLOOR, LABELS
from mklbci.exception import ParameterError, ShapeMismatchError
from mklbci.linalg.covariance import CovMatrix, regularize_spd
from mklbci.linalg.gaussian import KL_EPS, Gaussian, kl_gaussian
from mklbci.logger import log
from mklbci.signal.recording import Trial
from mklbci.spatial.csp import (ClassCovariances, FilterBank,
                                class_covariances, fit_csp)
from mklbci.typing import SubjectId


@dataclass(frozen=True)
class SimilarityWeights:
    '''
    目标被试对其他被试（某一类别）的相似度权重 ``α_j``，满足 ``Σ α_j = 1``
    '''
    target: SubjectId
    weights: dict[SubjectId, float] = field(hash=False)
    label: int | None = None

    def __getitem__(self, subject_id: SubjectId) -> float:
        return self.weights[subject_id]

    def ids(self) -> list[SubjectId]:
        return list(self.weights)


def weights_from_divergences(divergences: Mapping[SubjectId, float]) -> dict[SubjectId, float]:
    '''
    ``α_j = (1/Z)·(1/KL_j)``，其中 ``Z = Σ_l 1/KL_l``

    为 0（或负的数值误差）的散度被截断为 ``1e-12``
    '''
    if not divergences:
        raise ParameterError('至少需要一个其他被试才能计算相似度权重')

    inverse = {}
    for subject_id, kl in divergences.items():
        if kl < KL_FLOOR:
            log.warning(f'被试 {subject_id} 的 KL 散度为 {kl:.3g}，已截断为 {KL_FLOOR}')
            kl = KL_FLOOR
        inverse[subject_id] = 1.0 / kl

    z = sum(inverse.values())
    return {subject_id: value / z for subject_id, value in inverse.items()}


def similarity_weights(
    target_cov: CovMatrix,
    others: Mapping[SubjectId, CovMatrix],
    *,
    target: SubjectId = '',
    label: int | None = None
) -> SimilarityWeights:
    '''
    以零均值高斯分布之间的 ``KL[C_j ‖ C_k]`` 计算相似度权重

    计算前协方差先以 ``eps=1e-6`` 正则化
    '''
    target_gauss = Gaussian.zero_mean(regularize_spd(target_cov, KL_EPS))
    divergences = {
        subject_id: kl_gaussian(Gaussian.zero_mean(regularize_spd(cov, KL_EPS)), target_gauss)
        for subject_id, cov in others.items()
    }
    return SimilarityWeights(target, weights_from_divergences(divergences), label)


def composite_covariance(
    target: CovMatrix,
    others: Mapping[SubjectId, CovMatrix],
    weights: SimilarityWeights,
    lam: float
) -> CovMatrix:
    '''
    ``C̃ = (1−λ)·C_k + λ·Σ_j α_j·C_j``
    '''
    if not 0 <= lam <= 1:
        raise ParameterError(f'λ 必须位于 [0, 1]，得到 {lam}')
    if set(others) != set(weights.weights):
        raise ParameterError(
            f'相似度权重覆盖的被试 {sorted(weights.weights)} 与提供的被试 {sorted(others)} 不一致'
        )
    target = CovMatrix.of(target)
    if lam == 0:
        return target

    blend = np.zeros_like(target.data)
    for subject_id in sorted(others):
        cov = CovMatrix.of(others[subject_id])
        if cov.channels != target.channels:
            raise ShapeMismatchError(f'被试 {subject_id} 的协方差维度 {cov.channels} 与目标 {target.channels} 不一致')
        blend += weights[subject_id] * cov.data

    if lam == 1:
        return CovMatrix(blend)
    return CovMatrix((1 - lam) * target.data + lam * blend)


def per_class_weights(
    target_covs: ClassCovariances,
    others: Mapping[SubjectId, ClassCovariances],
    target: SubjectId = ''
) -> dict[int, SimilarityWeights]:
    return {
        label: similarity_weights(
            target_covs.of(label),
            {subject_id: covs.of(label) for subject_id, covs in others.items()},
            target=target,
            label=label
        )
        for label in LABELS
    }


def fit_ccsp_from_covariances(
    target_covs: ClassCovariances,
    others: Mapping[SubjectId, ClassCovariances],
    lam: float,
    *,
    target: SubjectId = '',
    weights: Mapping[int, SimilarityWeights] | None = None
) -> FilterBank:
    '''
    见 :func:`fit_ccsp`，``weights`` 可以传入已经算好的逐类权重以避免重复计算
    '''
    if weights is None:
        weights = per_class_weights(target_covs, others, target)

    regularized = [
        composite_covariance(
            target_covs.of(label),
            {subject_id: covs.of(label) for subject_id, covs in others.items()},
            weights[label],
            lam
        )
        for label in LABELS
    ]
    return fit_csp(*regularized, subject_id=target)


def fit_ccsp(
    trials: Iterable[Trial],
    others: Mapping[SubjectId, ClassCovariances],
    lam: float,
    *,
    target: SubjectId = ''
) -> FilterBank:
    '''
    composite CSP：每个类别的协方差各自以该类别的相似度权重向其他被试正则化，再进行 :func:`~.fit_csp`
    '''
    return fit_ccsp_from_covariances(class_covariances(trials), others, lam, target=target)


def alpha_row(weights: Mapping[int, SimilarityWeights]) -> dict[SubjectId, float]:
    '''
    两个类别权重的平均，用于报告中的相似度矩阵
    '''
    rows: Iterable[SimilarityWeights] = weights.values()
    ids = sorted({subject_id for row in rows for subject_id in row.weights})
    return {
        subject_id: float(np.mean([row.weights[subject_id] for row in weights.values()]))
        for subject_id in ids
    }
