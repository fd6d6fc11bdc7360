from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from mklbci.classifiers.kernels import KernelMatrix
from mklbci.exception import (DegenerateInputError, DegenerateKernelError,
                              ParameterError, ShapeMismatchError)
from mklbci.logger import log
from mklbci.typing import Matrix, MatrixLike, Vector

SMO_TOL = 1e-5
TAU = 1e-12
BOUND_SNAP = 1e-12


@dataclass(frozen=True, eq=False)
class SvmSolution:
    '''
    SVM 对偶问题的解

    决策函数为 ``f(x) = Σ α_i·y_i·k(x_i, x) + b``

    - ``alphas``: 满足 ``0 <= α_i <= C`` 以及 ``Σ α_i·y_i = 0``
    - ``objective``: 对偶目标 ``Σα − ½·Σ α_i α_l y_i y_l K_il``
    - ``kkt_gap``: 结束时最大违反对的 KKT 违反量
    '''
    alphas: Vector = field(repr=False)
    bias: float
    objective: float
    labels: np.ndarray = field(repr=False)
    C: float
    converged: bool = True
    iterations: int = 0
    kkt_gap: float = 0.0

    @property
    def support(self) -> np.ndarray:
        return np.flatnonzero(self.alphas > 0)

    @property
    def dual_coef(self) -> Vector:
        return self.alphas * self.labels

    def decision(self, cross: MatrixLike) -> Vector:
        '''
        ``cross`` 为 测试 × 训练 的（组合）核矩阵
        '''
        cross = np.atleast_2d(np.asarray(cross, dtype=np.float64))
        if cross.shape[1] != len(self.alphas):
            raise ShapeMismatchError(f'交叉核的列数 {cross.shape[1]} 与训练样本数 {len(self.alphas)} 不一致')
        return cross @ self.dual_coef + self.bias


def check_labels(labels: MatrixLike, n: int | None = None) -> np.ndarray:
    y = np.asarray(labels).astype(np.int64).reshape(-1)
    if n is not None and len(y) != n:
        raise ShapeMismatchError(f'标签数量 {len(y)} 与样本数量 {n} 不一致')
    if not np.all(np.isin(y, (1, -1))):
        raise ParameterError('标签必须是 +1 或 -1')
    if not (np.any(y == 1) and np.any(y == -1)):
        raise DegenerateInputError('训练数据只包含一个类别')
    return y


def dual_objective(kmat: Matrix, y: np.ndarray, alpha: Vector) -> float:
    ay = alpha * y
    return float(alpha.sum() - 0.5 * ay @ kmat @ ay)


def svm_dual_solve(
    k: KernelMatrix | MatrixLike,
    labels: MatrixLike,
    C: float,
    *,
    tol: float = SMO_TOL,
    max_iter: int | None = None,
    alpha0: Vector | None = None
) -> SvmSolution:
    '''
    使用 SMO（每次选取最大违反对并解析地更新两个变量）求解带盒约束与等式约束的 SVM 对偶问题

    - 收敛条件为最大违反对的 KKT 违反量 ``<= tol``
    - 偏置取自由支持向量（``0 < α < C``）的平均；没有自由支持向量时取 KKT 上下界的中点
    - ``alpha0`` 可以给出一个可行的初始点（例如多核学习中上一轮的解）
    '''
    kmat = k.data if isinstance(k, KernelMatrix) else np.asarray(k, dtype=np.float64)
    if kmat.ndim != 2 or kmat.shape[0] != kmat.shape[1]:
        raise ShapeMismatchError(f'核矩阵必须是方阵，得到的形状为 {kmat.shape}')
    if not np.all(np.isfinite(kmat)):
        raise DegenerateKernelError('核矩阵含有非有限值')
    n = kmat.shape[0]
    if n < 2:
        raise DegenerateInputError(f'至少需要 2 个训练样本，得到 {n} 个')
    y = check_labels(labels, n)
    if not C > 0:
        raise ParameterError(f'C 必须为正数，得到 {C}')

    if alpha0 is None:
        alpha = np.zeros(n)
    else:
        alpha = np.array(alpha0, dtype=np.float64).reshape(-1)
        if (
            alpha.shape != (n,)
            or np.any(alpha < 0) or np.any(alpha > C)
            or abs(alpha @ y) > 1e-8 * max(1.0, C)
        ):
            raise ParameterError('alpha0 不是可行的初始点')

    yf = y.astype(np.float64)
    grad = yf * (kmat @ (alpha * yf)) - 1.0
    diag = np.diag(kmat)
    if max_iter is None:
        max_iter = max(100000, 1000 * n)

    converged = False
    gap = np.inf
    it = 0
    for it in range(1, max_iter + 1):
        score = -yf * grad
        up = ((y > 0) & (alpha < C)) | ((y < 0) & (alpha > 0))
        low = ((y > 0) & (alpha > 0)) | ((y < 0) & (alpha < C))
        up_idx = np.flatnonzero(up)
        low_idx = np.flatnonzero(low)
        i = up_idx[np.argmax(score[up_idx])]
        j = low_idx[np.argmin(score[low_idx])]
        gap = score[i] - score[j]
        if gap <= tol:
            converged = True
            break

        curvature = diag[i] + diag[j] - 2 * kmat[i, j]
        if curvature <= TAU:
            curvature = TAU
        step = min(
            gap / curvature,
            C - alpha[i] if y[i] > 0 else alpha[i],
            alpha[j] if y[j] > 0 else C - alpha[j],
        )

        alpha[i] += yf[i] * step
        alpha[j] -= yf[j] * step
        for t in (i, j):
            if alpha[t] < BOUND_SNAP * C:
                alpha[t] = 0.0
            elif alpha[t] > C - BOUND_SNAP * C:
                alpha[t] = C

        grad += step * yf * (kmat[:, i] - kmat[:, j])

    if not converged:
        log.warning(f'SMO 在 {max_iter} 次迭代后仍未收敛（KKT 违反量 {gap:.3g}）')

    score = -yf * grad
    free = (alpha > BOUND_SNAP * C) & (alpha < C - BOUND_SNAP * C)
    if np.any(free):
        bias = float(np.mean(score[free]))
    else:
        up = ((y > 0) & (alpha < C)) | ((y < 0) & (alpha > 0))
        low = ((y > 0) & (alpha > 0)) | ((y < 0) & (alpha < C))
        upper = score[up].max() if np.any(up) else score[low].min()
        lower = score[low].min() if np.any(low) else score[up].max()
        bias = float((upper + lower) / 2)

    alpha.setflags(write=False)
    y.setflags(write=False)
    return SvmSolution(
        alphas=alpha,
        bias=bias,
        objective=dual_objective(kmat, yf, alpha),
        labels=y,
        C=float(C),
        converged=converged,
        iterations=it,
        kkt_gap=float(max(gap, 0.0)),
    )
