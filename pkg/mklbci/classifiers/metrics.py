from __future__ import annotations

import numpy as np

from mklbci.exception import DegenerateInputError, ShapeMismatchError
from mklbci.typing import MatrixLike


def predict_labels(decisions: MatrixLike) -> np.ndarray:
    '''
    ``sign(f)``，``f = 0`` 时取 +1
    '''
    return np.where(np.asarray(decisions, dtype=np.float64) >= 0, 1, -1)


def error_rate(predicted: MatrixLike, truth: MatrixLike) -> float:
    '''
    预测标签与真实标签不一致的比例
    '''
    a = np.asarray(predicted).reshape(-1)
    b = np.asarray(truth).reshape(-1)
    if len(a) != len(b):
        raise ShapeMismatchError(f'预测标签数量 {len(a)} 与真实标签数量 {len(b)} 不一致')
    if len(a) == 0:
        raise DegenerateInputError('无法对空的标签序列计算错误率')
    return float(np.count_nonzero(a != b)) / len(a)
