from __future__ import annotations

from collections import Counter

import numpy as np
from sklearn.model_selection import StratifiedKFold

from mklbci.exception import FoldError, ParameterError
from mklbci.typing import MatrixLike


def stratified_folds(labels: MatrixLike, k: int, seed: int = 0) -> list[np.ndarray]:
    '''
    把样本分为 ``k`` 个互不相交的验证集（每个为升序的下标数组），并保持各折的类别比例

    - 每一折中各类别的数量与全局比例相差不超过 1 个试次
    - 划分只由 ``seed`` 决定
    - ``k`` 等于样本数时即为留一法，每一折只有一个样本
    '''
    y = np.asarray(labels).reshape(-1)
    n = len(y)
    if k < 2:
        raise ParameterError(f'折数必须 >= 2，得到 {k}')
    if k > n:
        raise FoldError(f'折数 {k} 多于样本数 {n}')

    if k == n:
        order = np.random.default_rng(seed).permutation(n)
        return [np.array([i]) for i in order]

    counts = Counter(y.tolist())
    small = {label: cnt for label, cnt in counts.items() if cnt < k}
    if small:
        raise FoldError(f'以下类别的样本数少于折数 {k}: {small}')

    splitter = StratifiedKFold(n_splits=k, shuffle=True, random_state=seed)
    return [np.sort(test) for _, test in splitter.split(np.zeros((n, 1)), y)]


def train_indices(folds: list[np.ndarray], held_out: int, n: int) -> np.ndarray:
    mask = np.ones(n, dtype=bool)
    mask[folds[held_out]] = False
    return np.flatnonzero(mask)
