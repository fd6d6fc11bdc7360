from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

from mklbci.classifiers.kernels import (KernelMatrix, KernelStack,
                                        cross_kernel, kernel_stack)
from mklbci.classifiers.svm import (SMO_TOL, SvmSolution, check_labels,
                                    svm_dual_solve)
from mklbci.exception import ParameterError, ShapeMismatchError
from mklbci.logger import log
from mklbci.typing import Matrix, MatrixLike, SubjectId, Vector

P_ONE_SUBSTITUTE = 1.0001
BETA_TOL = 1e-5
OBJECTIVE_RTOL = 1e-7
MAX_OUTER_ITER = 200
REPORT_BETA_FLOOR = 1e-12


@dataclass(frozen=True, eq=False)
class MklModel:
    '''
    ℓp 范数多核学习得到的模型

    决策函数为 ``f(x) = Σ_i α_i·y_i·Σ_j β_j·k_j(x_i, x) + b``

    - ``p`` 为所请求的范数参数（``p=1`` 在内部以 ``1.0001`` 代替，但这里记录的仍是 1）
    - ``train_blocks`` 为各视角的训练特征，预测时用于计算交叉核
    - ``objective_trace`` 为每一轮外层迭代的 min-max 目标值
    - ``stagnated`` 表示所有视角的 margin 均为 0、β 无法继续更新（此时 ``converged`` 为 ``False``）
    '''
    solution: SvmSolution
    betas: Vector
    p: float
    view_ids: tuple[SubjectId, ...]
    norm_factors: tuple[float, ...]
    train_blocks: tuple[Matrix, ...] = field(default=(), repr=False)
    converged: bool = True
    stagnated: bool = False
    iterations: int = 0
    objective_trace: tuple[float, ...] = field(default=(), repr=False)

    @property
    def C(self) -> float:
        return self.solution.C

    @property
    def n_views(self) -> int:
        return len(self.betas)

    def p_norm(self) -> float:
        return beta_norm(self.betas, self.p)

    def report_betas(self) -> Vector:
        '''
        用于报告的 β，小于 ``1e-12`` 的分量被置为 0
        '''
        betas = np.array(self.betas)
        betas[betas < REPORT_BETA_FLOOR] = 0.0
        return betas

    def decision_function(self, test_blocks: Sequence[MatrixLike]) -> Vector:
        return mkl_predict(self, test_blocks)


def effective_p(p: float) -> float:
    if not p >= 1:
        raise ParameterError(f'范数参数 p 必须 >= 1，得到 {p}')
    return P_ONE_SUBSTITUTE if p == 1 else float(p)


def beta_norm(betas: Vector, p: float) -> float:
    betas = np.asarray(betas, dtype=np.float64)
    if math.isinf(p):
        return float(np.max(betas))
    p = effective_p(p)
    return float(np.sum(betas ** p) ** (1 / p))


def combine_kernels(stack: KernelStack, betas: MatrixLike) -> KernelMatrix:
    '''
    ``K = Σ_j β_j·K_j``
    '''
    betas = np.asarray(betas, dtype=np.float64).reshape(-1)
    if len(betas) != len(stack):
        raise ShapeMismatchError(f'β 的数量 {len(betas)} 与核矩阵数量 {len(stack)} 不一致')
    if np.any(betas < 0):
        raise ParameterError(f'β 不能为负数，得到 {betas.tolist()}')

    combined = np.zeros((stack.n, stack.n))
    for beta, kernel in zip(betas, stack.kernels):
        combined += beta * kernel.data
    return KernelMatrix(combined)


def beta_update(margins: MatrixLike, p: float, previous: Vector | None = None) -> Vector:
    '''
    对给定的 ``s_j = β_j²·αᵀ(Y·K_j·Y)α`` 求解 ``‖β‖_p <= 1`` 下的最优 β

    - 有限 p：``β_j = s_j^{1/(p+1)} / (Σ_k s_k^{p/(p+1)})^{1/p}``，此时 ``‖β‖_p = 1``
    - ``p = ∞``：``β_j = 1``
    - 所有 ``s_j`` 均为 0 时保留 ``previous`` （未给出时取均匀的 β）并给出警告
    '''
    s = np.maximum(np.asarray(margins, dtype=np.float64).reshape(-1), 0.0)
    m = len(s)
    if math.isinf(p):
        return np.ones(m)
    p = effective_p(p)

    if not np.any(s > 0):
        log.warning('所有视角的 margin 均为 0，β 保持不变')
        if previous is not None:
            return np.array(previous, dtype=np.float64)
        return np.full(m, m ** (-1 / p))

    numerator = s ** (1 / (p + 1))
    denominator = np.sum(s ** (p / (p + 1))) ** (1 / p)
    return numerator / denominator


def view_margins(stack: KernelStack, solution: SvmSolution, betas: Vector) -> Vector:
    ay = solution.dual_coef
    return np.array([
        beta ** 2 * float(ay @ kernel.data @ ay)
        for beta, kernel in zip(betas, stack.kernels)
    ])


def mkl_train(
    stack: KernelStack,
    labels: MatrixLike,
    C: float,
    p: float,
    *,
    train_blocks: Sequence[MatrixLike] = (),
    beta_tol: float = BETA_TOL,
    objective_rtol: float = OBJECTIVE_RTOL,
    max_iter: int = MAX_OUTER_ITER,
    smo_tol: float = SMO_TOL
) -> MklModel:
    '''
    交替优化 α 与 β：

    1. β 初始化为 ``m^{-1/p}`` （``p=∞`` 时为 1），使 ``‖β‖_p = 1``
    2. 在组合核 ``Σ β_j K_j`` 上求解 SVM 对偶问题（以上一轮的 α 作为初始点）
    3. 以 :func:`beta_update` 更新 β

    直到 ``max|Δβ| <= 1e-5`` 且目标值的相对变化 ``<= 1e-7``，最多 200 轮；
    未收敛时返回当前结果并标记 ``converged=False``；
    所有 margin 均为 0 时停止迭代并标记 ``stagnated=True``
    '''
    y = check_labels(labels, stack.n)
    pe = math.inf if math.isinf(p) else effective_p(p)
    m = len(stack)

    blocks = tuple(np.array(block, dtype=np.float64) for block in train_blocks)
    if blocks and len(blocks) != m:
        raise ShapeMismatchError(f'训练特征的视角数 {len(blocks)} 与核矩阵数量 {m} 不一致')

    def make(
        solution: SvmSolution,
        betas: Vector,
        converged: bool,
        iterations: int,
        trace: list[float],
        stagnated: bool = False
    ) -> MklModel:
        betas = np.array(betas, dtype=np.float64)
        betas.setflags(write=False)
        return MklModel(
            solution=solution,
            betas=betas,
            p=float(p),
            view_ids=stack.view_ids,
            norm_factors=stack.norm_factors,
            train_blocks=blocks,
            converged=converged,
            stagnated=stagnated,
            iterations=iterations,
            objective_trace=tuple(trace),
        )

    # m = 1 forces β = 1; p = ∞ is attained at the all-ones corner
    if m == 1 or math.isinf(pe):
        betas = np.ones(m)
        solution = svm_dual_solve(combine_kernels(stack, betas), y, C, tol=smo_tol)
        return make(solution, betas, True, 0, [solution.objective])

    betas = np.full(m, m ** (-1 / pe))
    solution = svm_dual_solve(combine_kernels(stack, betas), y, C, tol=smo_tol)
    trace = [solution.objective]

    converged = False
    stagnated = False
    iterations = 0
    for iterations in range(1, max_iter + 1):
        margins = view_margins(stack, solution, betas)
        if not np.any(margins > 0):
            log.warning(f'多核学习停滞：所有视角的 margin 均为 0，保留当前的 β (C={C}, p={p})')
            stagnated = True
            break

        new_betas = beta_update(margins, pe, betas)
        delta = float(np.max(np.abs(new_betas - betas)))
        betas = new_betas

        solution = svm_dual_solve(
            combine_kernels(stack, betas), y, C,
            tol=smo_tol,
            alpha0=np.array(solution.alphas)
        )
        trace.append(solution.objective)
        change = abs(trace[-1] - trace[-2]) / max(1.0, abs(trace[-1]))
        log.debug(f'mkl iter={iterations} objective={trace[-1]:.10g} max|Δβ|={delta:.3g}')

        if delta <= beta_tol and change <= objective_rtol:
            converged = True
            break

    if not converged and not stagnated:
        log.warning(f'多核学习在 {max_iter} 轮后仍未收敛 (C={C}, p={p})')

    return make(solution, betas, converged, iterations, trace, stagnated)


def fit_mkl(
    blocks: Sequence[MatrixLike],
    labels: MatrixLike,
    C: float,
    p: float,
    view_ids: Sequence[SubjectId] = (),
    **kwargs
) -> MklModel:
    '''
    由各视角的训练特征构造归一化的线性核，再进行 :func:`mkl_train`
    '''
    stack = kernel_stack(blocks, view_ids)
    return mkl_train(stack, labels, C, p, train_blocks=blocks, **kwargs)


def combined_cross_kernel(model: MklModel, test_blocks: Sequence[MatrixLike]) -> Matrix:
    if not model.train_blocks:
        raise ParameterError('模型没有保留训练特征，无法计算交叉核')
    if len(test_blocks) != model.n_views:
        raise ShapeMismatchError(f'测试特征的视角数 {len(test_blocks)} 与模型的视角数 {model.n_views} 不一致')

    combined = None
    for beta, train, test, factor in zip(model.betas, model.train_blocks, test_blocks, model.norm_factors):
        term = beta * cross_kernel(train, test, factor)
        combined = term if combined is None else combined + term
    return combined


def mkl_predict(model: MklModel, test_blocks: Sequence[MatrixLike]) -> Vector:
    '''
    对测试试次计算决策值 ``f``，预测标签为 ``sign(f)``，``f = 0`` 时取 +1
    '''
    return model.solution.decision(combined_cross_kernel(model, test_blocks))
