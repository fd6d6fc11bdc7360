from __future__ import annotations

from dataclasses import dataclass, field
from typing import Iterable

import numpy as np

from mklbci.exception import (DegenerateInputError, ParameterError,
                              ShapeMismatchError)
from mklbci.typing import Matrix, MatrixLike

SYMMETRY_RTOL = 1e-12


@dataclass(frozen=True, eq=False)
class CovMatrix:
    '''
    对称半正定的协方差矩阵（通道数 × 通道数）

    构造时会检查形状、有限性与对称性，``data`` 会被拷贝并设为只读
    '''
    data: Matrix = field(repr=False)

    def __post_init__(self) -> None:
        data = np.array(self.data, dtype=np.float64)
        if data.ndim != 2 or data.shape[0] != data.shape[1] or data.shape[0] == 0:
            raise ShapeMismatchError(f'协方差矩阵必须是非空方阵，得到的形状为 {data.shape}')
        if not np.all(np.isfinite(data)):
            raise DegenerateInputError('协方差矩阵含有非有限值')
        scale = max(np.abs(data).max(), np.finfo(np.float64).tiny)
        if np.abs(data - data.T).max() > SYMMETRY_RTOL * scale:
            raise ShapeMismatchError('协方差矩阵不对称')
        data.setflags(write=False)
        object.__setattr__(self, 'data', data)

    @property
    def channels(self) -> int:
        return self.data.shape[0]

    def __array__(self, dtype=None, copy=None) -> Matrix:
        return self.data if dtype is None else self.data.astype(dtype)

    @staticmethod
    def of(value: CovMatrix | MatrixLike) -> CovMatrix:
        return value if isinstance(value, CovMatrix) else CovMatrix(np.asarray(value))


def _as_trial_array(trial) -> Matrix:
    data = getattr(trial, 'data', trial)
    data = np.asarray(data, dtype=np.float64)
    if data.ndim != 2:
        raise ShapeMismatchError(f'试次数据必须是 通道 × 采样点 的矩阵，得到的形状为 {data.shape}')
    return data


def trial_covariance(trial) -> CovMatrix:
    '''
    单个试次的协方差 ``X·Xᵀ / trace(X·Xᵀ)``

    不去均值（带通滤波后的数据已经是零均值的），迹归一化为 1

    ``trial`` 可以是 :class:`~.Trial` 也可以是 通道 × 采样点 的数组
    '''
    x = _as_trial_array(trial)
    if x.shape[1] < 2:
        raise DegenerateInputError(f'试次至少需要 2 个采样点，得到 {x.shape[1]} 个')
    if not np.all(np.isfinite(x)):
        raise DegenerateInputError('试次数据含有非有限值')

    xxt = x @ x.T
    xxt = (xxt + xxt.T) / 2     # exactly symmetric
    trace = np.trace(xxt)
    if trace <= 0:
        raise DegenerateInputError('试次数据全为 0，无法进行迹归一化')
    return CovMatrix(xxt / trace)


def class_covariance(trials: Iterable) -> CovMatrix:
    '''
    一个类别的协方差，即 :func:`trial_covariance` 在各试次上的算术平均
    '''
    covs = [trial_covariance(trial) for trial in trials]
    if not covs:
        raise DegenerateInputError('试次列表为空，无法估计类别协方差')
    shapes = {cov.channels for cov in covs}
    if len(shapes) != 1:
        raise ShapeMismatchError(f'试次的通道数不一致: {sorted(shapes)}')
    return CovMatrix(np.mean([cov.data for cov in covs], axis=0))


def regularize_spd(c: CovMatrix | MatrixLike, eps: float) -> CovMatrix:
    '''
    返回 ``c + eps·mean(diag(c))·I``

    对于迹非零的半正定矩阵，当 ``eps > 0`` 时结果严格正定
    '''
    if eps < 0:
        raise ParameterError(f'eps 不能为负数，得到 {eps}')
    c = CovMatrix.of(c)
    if eps == 0:
        return c
    shift = eps * np.mean(np.diag(c.data))
    return CovMatrix(c.data + shift * np.eye(c.channels))


def average_covariance(*covs: CovMatrix) -> CovMatrix:
    return CovMatrix(np.mean([CovMatrix.of(c).data for c in covs], axis=0))
