from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
from scipy.linalg import cho_solve, solve_triangular

from mklbci.exception import ShapeMismatchError
from mklbci.linalg.covariance import CovMatrix
from mklbci.linalg.eigen import cholesky_lower
from mklbci.typing import MatrixLike, Vector

KL_EPS = 1e-6
'''对（迹归一化后可能秩亏的）协方差计算 KL 散度之前所使用的正则化强度'''


@dataclass(frozen=True, eq=False)
class Gaussian:
    '''
    多元正态分布 ``N(mean, covariance)``
    '''
    mean: Vector = field(repr=False)
    covariance: CovMatrix = field(repr=False)

    def __post_init__(self) -> None:
        covariance = CovMatrix.of(self.covariance)
        mean = np.array(self.mean, dtype=np.float64).reshape(-1)
        if mean.shape[0] != covariance.channels:
            raise ShapeMismatchError(
                f'均值维度 {mean.shape[0]} 与协方差维度 {covariance.channels} 不一致'
            )
        mean.setflags(write=False)
        object.__setattr__(self, 'mean', mean)
        object.__setattr__(self, 'covariance', covariance)

    @property
    def dim(self) -> int:
        return self.covariance.channels

    @staticmethod
    def zero_mean(covariance: CovMatrix | MatrixLike) -> Gaussian:
        covariance = CovMatrix.of(covariance)
        return Gaussian(np.zeros(covariance.channels), covariance)


def kl_gaussian(n0: Gaussian, n1: Gaussian) -> float:
    '''
    ``KL(N0 ‖ N1) = ½·(tr(Σ1⁻¹Σ0) + (μ1−μ0)ᵀΣ1⁻¹(μ1−μ0) − ln(detΣ0/detΣ1) − k)``

    行列式通过 Cholesky 分解以对数形式计算；两个协方差都必须严格正定
    '''
    if n0.dim != n1.dim:
        raise ShapeMismatchError(f'两个分布的维度不一致: {n0.dim} 与 {n1.dim}')

    l0 = cholesky_lower(n0.covariance, 'Σ0')
    l1 = cholesky_lower(n1.covariance, 'Σ1')

    trace_term = float(np.trace(cho_solve((l1, True), n0.covariance.data)))

    diff = n1.mean - n0.mean
    z = solve_triangular(l1, diff, lower=True)
    quad_term = float(z @ z)

    log_det0 = 2.0 * np.sum(np.log(np.diag(l0)))
    log_det1 = 2.0 * np.sum(np.log(np.diag(l1)))

    return 0.5 * (trace_term + quad_term - (log_det0 - log_det1) - n0.dim)
