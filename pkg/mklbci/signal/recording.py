from __future__ import annotations

import math
from collections import Counter
from dataclasses import dataclass, field, replace
from typing import Iterable, Mapping, NamedTuple, Self

import numpy as np

from mklbci.constants import LABELS
from mklbci.exception import (ChannelSelectionError, EpochError,
                              ParameterError, SessionValidationError,
                              ShapeMismatchError)
from mklbci.typing import Matrix


class Marker(NamedTuple):
    sample: int
    label: int


@dataclass(frozen=True, eq=False)
class Recording:
    '''
    连续的多通道记录

    - ``data``: 通道 × 采样点
    - ``fs``: 采样率（Hz）
    - ``channel_names``: 各通道名称，长度与通道数一致
    - ``markers``: 提示（cue）标记，每个为 ``(sample, label)``
    '''
    data: Matrix = field(repr=False)
    fs: float
    channel_names: tuple[str, ...]
    markers: tuple[Marker, ...] = ()

    def __post_init__(self) -> None:
        data = np.array(self.data, dtype=np.float64)
        if data.ndim != 2:
            raise ShapeMismatchError(f'记录数据必须是 通道 × 采样点 的矩阵，得到的形状为 {data.shape}')
        if not self.fs > 0:
            raise ParameterError(f'采样率必须为正数，得到 {self.fs}')
        names = tuple(str(name) for name in self.channel_names)
        if len(names) != data.shape[0]:
            raise ShapeMismatchError(
                f'通道名称数量 {len(names)} 与通道数 {data.shape[0]} 不一致'
            )
        markers = tuple(Marker(int(sample), int(label)) for sample, label in self.markers)
        n_samples = data.shape[1]
        bad = [m for m in markers if not 0 <= m.sample < n_samples]
        if bad:
            raise SessionValidationError(
                f'标记超出记录范围 [0, {n_samples}): '
                + ', '.join(f'#{markers.index(m)} at sample {m.sample}' for m in bad)
            )

        data.setflags(write=False)
        object.__setattr__(self, 'data', data)
        object.__setattr__(self, 'fs', float(self.fs))
        object.__setattr__(self, 'channel_names', names)
        object.__setattr__(self, 'markers', markers)

    @property
    def n_channels(self) -> int:
        return self.data.shape[0]

    @property
    def n_samples(self) -> int:
        return self.data.shape[1]

    def with_data(self, data: Matrix) -> Self:
        return replace(self, data=data)

    def truncated_markers(self, count: int) -> Self:
        '''
        只保留 ``count`` 个标记（``count <= 0`` 表示全部保留）

        各类别按时间顺序各取前 ``count // 类别数`` 个，余数依次分给先出现的类别；
        保留的标记维持原有的时间顺序，某类别的标记不足时全部保留
        '''
        if count <= 0 or count >= len(self.markers):
            return self
        labels = list(dict.fromkeys(marker.label for marker in self.markers))
        base, extra = divmod(count, len(labels))
        quota = {label: base + (i < extra) for i, label in enumerate(labels)}

        kept = []
        for marker in self.markers:
            if quota[marker.label] > 0:
                kept.append(marker)
                quota[marker.label] -= 1
        return replace(self, markers=tuple(kept))

    def is_identical(self, other: Recording) -> bool:
        return (
            self.fs == other.fs
            and self.channel_names == other.channel_names
            and self.markers == other.markers
            and self.data.shape == other.data.shape
            and np.array_equal(self.data, other.data)
        )


@dataclass(frozen=True, eq=False)
class Trial:
    '''
    单个试次：通道 × 采样点 的数据与 ±1 的标签
    '''
    data: Matrix = field(repr=False)
    label: int

    def __post_init__(self) -> None:
        data = np.array(self.data, dtype=np.float64)
        if data.ndim != 2:
            raise ShapeMismatchError(f'试次数据必须是 通道 × 采样点 的矩阵，得到的形状为 {data.shape}')
        if self.label not in LABELS:
            raise ParameterError(f'试次标签必须是 +1 或 -1，得到 {self.label}')
        data.setflags(write=False)
        object.__setattr__(self, 'data', data)
        object.__setattr__(self, 'label', int(self.label))

    @property
    def n_channels(self) -> int:
        return self.data.shape[0]

    @property
    def n_samples(self) -> int:
        return self.data.shape[1]

    def scaled(self, factor: float) -> Trial:
        return Trial(self.data * factor, self.label)


def labels_of(trials: Iterable[Trial]) -> np.ndarray:
    return np.array([trial.label for trial in trials], dtype=np.int64)


def select_channels(rec: Recording, names: Iterable[str]) -> Recording:
    '''
    按 ``names`` 的顺序选取（并重排）通道

    名称不存在或重复请求时抛出 :class:`~.ChannelSelectionError`，并列出所有出错的名称
    '''
    names = list(names)
    counts = Counter(names)
    duplicated = sorted(name for name, cnt in counts.items() if cnt > 1)
    unknown = [name for name in counts if name not in rec.channel_names]
    ambiguous = sorted(name for name in counts if rec.channel_names.count(name) > 1)

    problems = []
    if unknown:
        problems.append(f'unknown: {unknown}')
    if duplicated:
        problems.append(f'duplicated: {duplicated}')
    if ambiguous:
        problems.append(f'ambiguous in recording: {ambiguous}')
    if problems:
        raise ChannelSelectionError('无法选取通道，' + '; '.join(problems))

    indices = [rec.channel_names.index(name) for name in names]
    return replace(rec, data=rec.data[indices], channel_names=tuple(names))


def ms_to_samples(ms: float, fs: float) -> int:
    '''
    毫秒换算为采样点数，恰好位于两个采样点中间时向上取整（2.5 → 3，-2.5 → -2）
    '''
    return math.floor(ms * fs / 1000 + 0.5)


def epoch(
    rec: Recording,
    start_ms: float,
    end_ms: float,
    *,
    label_map: Mapping[int, int] | None = None
) -> list[Trial]:
    '''
    以每个标记为基准切出试次

    窗口为半开区间 ``[cue + round(start_ms·fs/1000), cue + round(end_ms·fs/1000))``，
    例如 ``fs=100`` 时 750~3500 ms 恰好得到 275 个采样点

    ``label_map`` 用于把标记上的类别编号映射为 ±1（默认认为标记本身就是 ±1）
    '''
    start = ms_to_samples(start_ms, rec.fs)
    end = ms_to_samples(end_ms, rec.fs)
    if end <= start:
        raise ParameterError(f'试次窗口为空: {start_ms} ms ~ {end_ms} ms 对应 {end - start} 个采样点')

    trials = []
    for idx, marker in enumerate(rec.markers):
        begin = marker.sample + start
        stop = marker.sample + end
        if begin < 0 or stop > rec.n_samples:
            raise EpochError(
                f'标记 #{idx}（sample {marker.sample}）的窗口 [{begin}, {stop}) '
                f'超出记录范围 [0, {rec.n_samples})'
            )
        label = marker.label if label_map is None else label_map[marker.label]
        trials.append(Trial(rec.data[:, begin:stop], label))

    return trials
