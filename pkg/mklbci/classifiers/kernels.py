from __future__ import annotations

from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

from mklbci.exception import (DegenerateInputError, DegenerateKernelError,
                              ShapeMismatchError)
from mklbci.typing import Matrix, MatrixLike, SubjectId

NORM_FLOOR = 1e-300


@dataclass(frozen=True, eq=False)
class KernelMatrix:
    '''
    n × n 的 Gram 矩阵

    ``norm_factor`` 记录了已经除掉的平均对角值（未归一化时为 1）
    '''
    data: Matrix = field(repr=False)
    norm_factor: float = 1.0

    def __post_init__(self) -> None:
        data = np.array(self.data, dtype=np.float64)
        if data.ndim != 2 or data.shape[0] != data.shape[1]:
            raise ShapeMismatchError(f'核矩阵必须是方阵，得到的形状为 {data.shape}')
        if not np.all(np.isfinite(data)):
            raise DegenerateKernelError('核矩阵含有非有限值')
        data.setflags(write=False)
        object.__setattr__(self, 'data', data)
        object.__setattr__(self, 'norm_factor', float(self.norm_factor))

    @property
    def n(self) -> int:
        return self.data.shape[0]

    def mean_diag(self) -> float:
        return float(np.mean(np.diag(self.data)))


@dataclass(frozen=True, eq=False)
class KernelStack:
    '''
    m 个共享同一批训练试次的核矩阵，顺序与特征的视角顺序一致
    '''
    kernels: tuple[KernelMatrix, ...]
    view_ids: tuple[SubjectId, ...] = ()

    def __post_init__(self) -> None:
        kernels = tuple(self.kernels)
        if not kernels:
            raise ShapeMismatchError('核矩阵组不能为空')
        sizes = {k.n for k in kernels}
        if len(sizes) != 1:
            raise ShapeMismatchError(f'核矩阵的大小不一致: {sorted(sizes)}')
        view_ids = tuple(self.view_ids) or tuple(str(j) for j in range(len(kernels)))
        if len(view_ids) != len(kernels):
            raise ShapeMismatchError(f'视角编号数量 {len(view_ids)} 与核矩阵数量 {len(kernels)} 不一致')
        object.__setattr__(self, 'kernels', kernels)
        object.__setattr__(self, 'view_ids', view_ids)

    def __len__(self) -> int:
        return len(self.kernels)

    def __getitem__(self, j: int) -> KernelMatrix:
        return self.kernels[j]

    @property
    def n(self) -> int:
        return self.kernels[0].n

    @property
    def norm_factors(self) -> tuple[float, ...]:
        return tuple(k.norm_factor for k in self.kernels)


def _as_features(features: MatrixLike, what: str) -> Matrix:
    try:
        arr = np.array(features, dtype=np.float64)
    except ValueError as e:
        raise ShapeMismatchError(f'{what} 的维度不一致') from e
    if arr.ndim == 1:
        arr = arr.reshape(1, -1)
    if arr.ndim != 2:
        raise ShapeMismatchError(f'{what} 必须是 n × d 的矩阵，得到的形状为 {arr.shape}')
    if not np.all(np.isfinite(arr)):
        raise DegenerateInputError(f'{what} 含有非有限值')
    return arr


def _gram(a: Matrix, b: Matrix) -> Matrix:
    # same summation order for train and cross kernels
    return np.einsum('id,ld->il', a, b)


def linear_kernel(features: MatrixLike) -> KernelMatrix:
    '''
    线性核 ``K[i][l] = f_iᵀ·f_l``（未归一化）
    '''
    f = _as_features(features, 'features')
    if f.shape[0] < 1:
        raise DegenerateInputError('至少需要一个特征向量')
    return KernelMatrix(_gram(f, f))


def normalize_avg_diag(k: KernelMatrix) -> KernelMatrix:
    '''
    所有元素除以平均对角值，使归一化后的平均对角值为 1

    除数会累乘进 ``norm_factor``，以便对测试数据的交叉核使用同一个除数
    '''
    factor = k.mean_diag()
    if factor <= NORM_FLOOR:
        raise DegenerateKernelError(f'核矩阵的平均对角值为 {factor:.3g}，无法归一化')
    return KernelMatrix(k.data / factor, k.norm_factor * factor)


def cross_kernel(train_features: MatrixLike, test_features: MatrixLike, norm_factor: float) -> Matrix:
    '''
    测试 × 训练 的交叉核，除以训练核的 ``norm_factor``（测试数据不参与归一化）
    '''
    train = _as_features(train_features, 'train_features')
    test = _as_features(test_features, 'test_features')
    if train.shape[1] != test.shape[1]:
        raise ShapeMismatchError(f'训练特征维度 {train.shape[1]} 与测试特征维度 {test.shape[1]} 不一致')
    return _gram(test, train) / norm_factor


def kernel_stack(blocks: Sequence[MatrixLike], view_ids: Sequence[SubjectId] = ()) -> KernelStack:
    '''
    每个视角的特征块各自构造线性核并做平均对角值归一化
    '''
    return KernelStack(
        tuple(normalize_avg_diag(linear_kernel(block)) for block in blocks),
        tuple(view_ids)
    )
