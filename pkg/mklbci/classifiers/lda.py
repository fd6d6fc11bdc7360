from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
from scipy.linalg import cho_solve

from mklbci.classifiers.svm import check_labels
from mklbci.constants import DEFAULT_LDA_GAMMA
from mklbci.exception import (DefinitenessError, DegenerateInputError,
                              ParameterError, ShapeMismatchError)
from mklbci.linalg.eigen import cholesky_lower
from mklbci.typing import Matrix, MatrixLike, Vector


@dataclass(frozen=True, eq=False)
class LdaModel:
    '''
    二分类（收缩）LDA：``f(x) = wᵀx + b``
    '''
    weights: Vector = field(repr=False)
    bias: float
    gamma: float

    @property
    def dim(self) -> int:
        return len(self.weights)

    def decision_function(self, features: MatrixLike) -> Vector:
        return lda_predict(self, features)


def within_class_scatter(x: Matrix, y: np.ndarray) -> Matrix:
    '''
    合并的类内协方差：各类别去掉各自均值后的离差平方和，除以总样本数
    '''
    scatter = np.zeros((x.shape[1], x.shape[1]))
    for label in (1, -1):
        centered = x[y == label] - x[y == label].mean(axis=0)
        scatter += centered.T @ centered
    scatter /= len(x)
    return (scatter + scatter.T) / 2


def shrink(scatter: Matrix, gamma: float) -> Matrix:
    '''
    ``(1−γ)·S + γ·mean(diag(S))·I``
    '''
    if gamma == 0:
        return scatter
    nu = float(np.mean(np.diag(scatter)))
    return (1 - gamma) * scatter + gamma * nu * np.eye(len(scatter))


def lda_fit(features: MatrixLike, labels: MatrixLike, gamma: float = DEFAULT_LDA_GAMMA) -> LdaModel:
    '''
    - ``w = S̃⁻¹·(μ₊ − μ₋)``，``S̃`` 为收缩后的类内协方差
    - ``b = −wᵀ·(μ₊ + μ₋)/2``，使两类均值的中点恰好落在决策边界上

    ``γ = 0`` 且类内协方差奇异时抛出 :class:`~.DefinitenessError`
    '''
    x = np.array(features, dtype=np.float64)
    if x.ndim == 1:
        x = x.reshape(-1, 1)
    if x.ndim != 2 or x.shape[1] < 1:
        raise ShapeMismatchError(f'特征必须是 n × d 的矩阵（d >= 1），得到的形状为 {x.shape}')
    if not np.all(np.isfinite(x)):
        raise DegenerateInputError('特征含有非有限值')
    y = check_labels(labels, len(x))
    if not 0 <= gamma <= 1:
        raise ParameterError(f'收缩系数 γ 必须位于 [0, 1]，得到 {gamma}')

    mu_pos = x[y == 1].mean(axis=0)
    mu_neg = x[y == -1].mean(axis=0)
    scatter = shrink(within_class_scatter(x, y), gamma)

    try:
        lower = cholesky_lower(scatter, 'within-class scatter')
    except DefinitenessError as e:
        hint = '，请使用 γ > 0 的收缩' if gamma == 0 else ''
        raise DefinitenessError(f'类内协方差奇异{hint} ({e})', pivot=e.pivot) from e

    weights = cho_solve((lower, True), mu_pos - mu_neg)
    bias = -float(weights @ (mu_pos + mu_neg)) / 2
    weights.setflags(write=False)
    return LdaModel(weights, bias, float(gamma))


def lda_predict(model: LdaModel, features: MatrixLike) -> Vector:
    '''
    决策值 ``f = wᵀx + b``；标签为 ``sign(f)``，``f = 0`` 时取 +1
    '''
    x = np.atleast_2d(np.asarray(features, dtype=np.float64))
    if x.shape[1] != model.dim:
        raise ShapeMismatchError(f'特征维度 {x.shape[1]} 与模型维度 {model.dim} 不一致')
    return x @ model.weights + model.bias
