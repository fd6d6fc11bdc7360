from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
from scipy.linalg import eigh, solve_triangular
from scipy.linalg.lapack import dpotrf

from mklbci.exception import DefinitenessError, ShapeMismatchError
from mklbci.linalg.covariance import CovMatrix, regularize_spd
from mklbci.typing import Matrix, MatrixLike, Vector

DEFAULT_PENCIL_EPS = 1e-9


@dataclass(frozen=True, eq=False)
class GenEigResult:
    '''
    对称正定矩阵束 ``C1·w = λ·C2·w`` 的完整特征分解

    - ``eigenvalues`` 按降序排列
    - ``eigenvectors`` 的第 i 列对应第 i 个特征值，且满足 ``wᵀ·C2·w = 1``
    '''
    eigenvalues: Vector
    eigenvectors: Matrix = field(repr=False)

    def __len__(self) -> int:
        return len(self.eigenvalues)


def cholesky_lower(m: CovMatrix | MatrixLike, what: str = 'matrix') -> Matrix:
    '''
    下三角 Cholesky 分解 ``m = L·Lᵀ``

    失败时抛出 :class:`~.DefinitenessError`，并给出失败处的主元序号
    '''
    a = np.array(m, dtype=np.float64)
    lower, info = dpotrf(a, lower=1, clean=1)
    if info > 0:
        raise DefinitenessError(
            f'{what} 不是正定矩阵: Cholesky 分解在第 {info} 个主元处失败',
            pivot=int(info)
        )
    if info < 0:    # pragma: no cover
        raise DefinitenessError(f'{what} 的 Cholesky 分解参数有误 (info={info})')
    return lower


def log_det_spd(m: CovMatrix | MatrixLike, what: str = 'matrix') -> float:
    lower = cholesky_lower(m, what)
    return 2.0 * float(np.sum(np.log(np.diag(lower))))


def _flip_signs(vectors: Matrix) -> Matrix:
    # largest-magnitude entry of each column is made positive
    idx = np.argmax(np.abs(vectors), axis=0)
    signs = np.sign(vectors[idx, np.arange(vectors.shape[1])])
    signs[signs == 0] = 1
    return vectors * signs


def gen_eig_sym(
    c1: CovMatrix | MatrixLike,
    c2: CovMatrix | MatrixLike,
    *,
    eps: float = DEFAULT_PENCIL_EPS
) -> GenEigResult:
    '''
    求解对称定矩阵束 ``C1·w = λ·C2·w``

    - 先对 ``C2`` 施加 :func:`~.regularize_spd` （默认 ``eps=1e-9``），再做 Cholesky 分解 ``C2 = L·Lᵀ``
    - 化为标准对称特征问题 ``L⁻¹·C1·L⁻ᵀ·v = λ·v``，并以 ``w = L⁻ᵀ·v`` 还原
    - 特征值降序排列，相同特征值保持原有顺序；每个特征向量的绝对值最大的分量为正
    '''
    c1 = CovMatrix.of(c1)
    c2 = CovMatrix.of(c2)
    if c1.channels != c2.channels:
        raise ShapeMismatchError(f'矩阵束的维度不一致: {c1.channels} 与 {c2.channels}')

    lower = cholesky_lower(regularize_spd(c2, eps), 'C2')

    reduced = solve_triangular(lower, c1.data, lower=True)
    reduced = solve_triangular(lower, reduced.T, lower=True)
    reduced = (reduced + reduced.T) / 2

    values, vectors = eigh(reduced)
    order = np.argsort(-values, kind='stable')
    values = values[order]
    vectors = vectors[:, order]

    filters = solve_triangular(lower.T, vectors, lower=False)
    filters = _flip_signs(filters)

    values.setflags(write=False)
    filters.setflags(write=False)
    return GenEigResult(values, filters)
