from __future__ import annotations

from dataclasses import dataclass, field
from typing import Iterable, Sequence

import numpy as np

from mklbci.constants import N_FILTERS, VARIANCE_FLOOR
from mklbci.exception import DegenerateInputError, ShapeMismatchError
from mklbci.logger import log
from mklbci.signal.recording import Trial
from mklbci.spatial.csp import FilterBank
from mklbci.typing import Matrix, SubjectId, Vector


@dataclass(frozen=True, eq=False)
class FeatureVector:
    '''
    一个试次在 m 个视角下的特征：m 段、每段 6 个对数方差，按视角顺序拼接

    任一视角下有滤波器输出的方差被截断时 ``clamped`` 为 ``True``
    '''
    values: Vector = field(repr=False)
    label: int
    views: tuple[SubjectId, ...] = ()
    clamped: bool = False

    def block(self, j: int) -> Vector:
        return self.values[j * N_FILTERS:(j + 1) * N_FILTERS]

    @property
    def n_views(self) -> int:
        return len(self.values) // N_FILTERS


def view_order(target: SubjectId, others: Iterable[SubjectId]) -> list[SubjectId]:
    '''
    视角顺序：目标被试在前，其余被试按编号排序
    '''
    return [target, *sorted(subject_id for subject_id in others if subject_id != target)]


def _log_variances(bank: FilterBank, data: Matrix, where: str) -> tuple[Vector, bool]:
    if data.shape[0] != bank.channels:
        raise ShapeMismatchError(f'{where} 的通道数 {data.shape[0]} 与滤波器组通道数 {bank.channels} 不一致')
    if data.shape[1] < 2:
        raise DegenerateInputError(f'{where} 至少需要 2 个采样点，得到 {data.shape[1]} 个')

    projected = bank.filters.T @ data
    variances = np.var(projected, axis=1)
    clamped = bool(np.any(variances < VARIANCE_FLOOR))
    if clamped:
        log.warning(f'{where} 经滤波器组 {bank.subject_id!r} 滤波后的方差为 0，已截断为 {VARIANCE_FLOOR}')
        variances = np.maximum(variances, VARIANCE_FLOOR)
    return np.log(variances), clamped


def log_variance_features(bank: FilterBank, trial: Trial) -> Vector:
    '''
    ``f = log(var(Wᵀ·X))``

    方差为去均值、除以 N 的总体方差；为 0 的方差截断为 ``1e-300`` 并给出警告，
    需要知道哪些试次被截断时使用 :func:`feature_block_with_mask`
    '''
    return _log_variances(bank, trial.data, 'trial')[0]


def feature_block_with_mask(bank: FilterBank, trials: Sequence[Trial]) -> tuple[Matrix, np.ndarray]:
    '''
    一个视角下所有试次的特征（试次数 × 6），以及标记方差被截断的试次的布尔掩码
    '''
    if not trials:
        return np.zeros((0, N_FILTERS)), np.zeros(0, dtype=bool)
    rows = [
        _log_variances(bank, trial.data, f'trial #{i}')
        for i, trial in enumerate(trials)
    ]
    return np.vstack([values for values, _ in rows]), np.array([clamped for _, clamped in rows])


def feature_block(bank: FilterBank, trials: Sequence[Trial]) -> Matrix:
    '''
    一个视角下所有试次的特征，形状为 试次数 × 6
    '''
    return feature_block_with_mask(bank, trials)[0]


def _check_channels(banks: Sequence[FilterBank]) -> None:
    channels = {bank.channels for bank in banks}
    if len(channels) > 1:
        raise ShapeMismatchError(f'滤波器组的通道数不一致: {sorted(channels)}')


def view_blocks(banks: Sequence[FilterBank], trials: Sequence[Trial]) -> list[Matrix]:
    '''
    每个视角各自的特征矩阵，顺序与 ``banks`` 一致
    '''
    _check_channels(banks)
    return [feature_block(bank, trials) for bank in banks]


def multi_view_features(banks: Sequence[FilterBank], trials: Sequence[Trial]) -> list[FeatureVector]:
    '''
    把各个被试的滤波器组（包括目标被试自己的）应用到目标被试的试次上，
    每个试次得到 m 段 6 维特征的拼接
    '''
    _check_channels(banks)
    blocks, masks = zip(*(feature_block_with_mask(bank, trials) for bank in banks)) if banks else ((), ())
    views = tuple(bank.subject_id for bank in banks)
    return [
        FeatureVector(
            np.concatenate([block[i] for block in blocks]),
            trial.label,
            views,
            clamped=any(bool(mask[i]) for mask in masks)
        )
        for i, trial in enumerate(trials)
    ]
