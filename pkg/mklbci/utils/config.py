from __future__ import annotations

import json
import math
from contextvars import ContextVar
from dataclasses import dataclass, fields
from typing import Any, Self

import psutil

from mklbci.constants import (C_GRID, DEFAULT_BAND, DEFAULT_EPOCH_WINDOW_MS,
                              DEFAULT_FILTER_ORDER, DEFAULT_FOLDS,
                              DEFAULT_LDA_GAMMA, LAMBDA_GRID, METHODS, P_GRID)
from mklbci.exception import ConfigError
from mklbci.utils.file_ops import readall

config_ctx_var: ContextVar[list[ExperimentConfig]] = ContextVar('config_ctx_var')


class _ConfigMeta(type):
    @property
    def get(self) -> ExperimentConfig | ConfigGetter:
        return config_getter


@dataclass(kw_only=True)
class ExperimentConfig(metaclass=_ConfigMeta):
    '''实验配置

    基础用法
    ------------

    使用 ``ExperimentConfig.get.xxx`` 得到属性，例如 ``ExperimentConfig.get.folds`` 得到当前设置的折数

    使用 ``with ExperimentConfig(key=value):`` 在指定的配置下执行内容，例如：

    .. code-block:: python

        print(ExperimentConfig.get.folds)   # 5

        with ExperimentConfig(folds=3, c_grid=[1.0]):
            print(ExperimentConfig.get.folds)   # 3
            print(ExperimentConfig.get.c_grid)  # [1.0]

    其中没有设置的属性则采用默认设置 :py:obj:`~.default_config`

    配置文件
    ------------

    ``config.json`` 与该类的字段一一对应，未知的键会导致 :class:`~.ConfigError`；
    ``p_grid`` 中的 ∞ 写作字符串 ``"inf"``

    .. code-block:: json

        {
            "folds": 5,
            "p_grid": [1, 1.333, 2, "inf"],
            "methods": ["csp-svm", "mkl"]
        }
    '''
    band: tuple[float, float] = None
    filter_order: int = None
    epoch_window_ms: tuple[float, float] = None
    channels: tuple[str, ...] = None

    folds: int = None
    c_grid: list[float] = None
    p_grid: list[float] = None
    lambda_grid: list[float] = None
    lda_gamma: float = None

    seed: int = None
    methods: tuple[str, ...] = None

    calibration_trials: int = None
    workers: int = None

    def __enter__(self) -> Self:
        lst = config_stack()
        self.token = config_ctx_var.set([*lst, self])
        return self

    def __exit__(self, exc_type, exc_value, tb) -> None:
        config_ctx_var.reset(self.token)

    def resolved(self) -> ExperimentConfig:
        '''
        以当前的配置栈为基础、以自身的设置覆盖，得到所有字段均已设置的配置
        '''
        getter = ConfigGetter([*config_stack(), self])
        return ExperimentConfig(**{f.name: getattr(getter, f.name) for f in fields(ExperimentConfig)})

    def validate(self) -> None:
        cfg = self.resolved()

        low, high = cfg.band
        if not 0 < low < high:
            raise ConfigError(f'band 必须满足 0 < low < high，得到 {cfg.band}')
        if cfg.filter_order < 1:
            raise ConfigError(f'filter_order 必须 >= 1，得到 {cfg.filter_order}')
        start, end = cfg.epoch_window_ms
        if not start < end:
            raise ConfigError(f'epoch_window_ms 必须满足 start < end，得到 {cfg.epoch_window_ms}')
        if cfg.folds < 2:
            raise ConfigError(f'folds 必须 >= 2，得到 {cfg.folds}')

        for name in ('c_grid', 'p_grid', 'lambda_grid'):
            if not getattr(cfg, name):
                raise ConfigError(f'{name} 不能为空')
        if any(not c > 0 for c in cfg.c_grid):
            raise ConfigError(f'c_grid 中的值必须为正数，得到 {cfg.c_grid}')
        if any(not p >= 1 for p in cfg.p_grid):
            raise ConfigError(f'p_grid 中的值必须 >= 1，得到 {cfg.p_grid}')
        if any(not 0 <= lam <= 1 for lam in cfg.lambda_grid):
            raise ConfigError(f'lambda_grid 中的值必须位于 [0, 1]，得到 {cfg.lambda_grid}')
        if not 0 <= cfg.lda_gamma <= 1:
            raise ConfigError(f'lda_gamma 必须位于 [0, 1]，得到 {cfg.lda_gamma}')

        unknown = [m for m in cfg.methods if m not in METHODS]
        if unknown:
            raise ConfigError(f'未知的方法 {unknown}，可选的有 {list(METHODS)}')
        if cfg.calibration_trials < 0:
            raise ConfigError(f'calibration_trials 不能为负数，得到 {cfg.calibration_trials}')
        if cfg.workers < 1:
            raise ConfigError(f'workers 必须 >= 1，得到 {cfg.workers}')

    def to_dict(self) -> dict[str, Any]:
        '''
        只包含已设置的字段，∞ 写作 ``"inf"``
        '''
        data = {}
        for f in fields(self):
            value = getattr(self, f.name)
            if value is None:
                continue
            if f.name == 'p_grid':
                value = ['inf' if math.isinf(p) else p for p in value]
            elif isinstance(value, tuple):
                value = list(value)
            data[f.name] = value
        return data

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), indent=2)

    @classmethod
    def from_dict(cls, data: dict[str, Any]) -> Self:
        known = {f.name for f in fields(cls)}
        unknown = sorted(set(data) - known)
        if unknown:
            raise ConfigError(f'配置中含有未知的键: {unknown}')

        kwargs = {}
        try:
            for key, value in data.items():
                if value is None:
                    continue
                match key:
                    case 'band' | 'epoch_window_ms':
                        low, high = value
                        value = (float(low), float(high))
                    case 'channels' | 'methods':
                        value = tuple(str(v) for v in value)
                    case 'c_grid' | 'lambda_grid':
                        value = [float(v) for v in value]
                    case 'p_grid':
                        value = [float(v) for v in value]     # float('inf') parses "inf"
                    case 'lda_gamma':
                        value = float(value)
                    case _:
                        if isinstance(value, bool) or not isinstance(value, int):
                            raise TypeError(f'{key} 必须是整数')
                kwargs[key] = value
        except (TypeError, ValueError) as e:
            raise ConfigError(f'配置项 "{key}" 的值 {value!r} 有误: {e}') from e

        return cls(**kwargs)

    @classmethod
    def from_json(cls, path: str) -> Self:
        try:
            data = json.loads(readall(path))
        except (OSError, json.JSONDecodeError) as e:
            raise ConfigError(f'无法读取配置文件 "{path}": {e}') from e
        if not isinstance(data, dict):
            raise ConfigError(f'配置文件 "{path}" 的顶层必须是 JSON 对象')
        return cls.from_dict(data)


def physical_cores() -> int:
    return psutil.cpu_count(logical=False) or 1


default_config = ExperimentConfig(
    band=DEFAULT_BAND,
    filter_order=DEFAULT_FILTER_ORDER,
    epoch_window_ms=DEFAULT_EPOCH_WINDOW_MS,
    channels=(),

    folds=DEFAULT_FOLDS,
    c_grid=list(C_GRID),
    p_grid=list(P_GRID),
    lambda_grid=list(LAMBDA_GRID),
    lda_gamma=DEFAULT_LDA_GAMMA,

    seed=0,
    methods=METHODS,

    calibration_trials=0,
    workers=physical_cores(),
)
'''
默认配置

其中：

- ``channels`` 为空表示使用记录中的全部通道
- ``calibration_trials`` 为 0 表示使用目标被试全部的训练试次
- ``workers`` 为物理核心数
'''

config_ctx_var.set([default_config])


def config_stack() -> list[ExperimentConfig]:
    # worker threads start from an empty context
    return config_ctx_var.get(None) or [default_config]


class ConfigGetter:
    '''
    与配置数据相关联的数据的获取

    请仍然使用 ``ExperimentConfig.get.xxx`` 来获取定义在该类中的内容
    '''
    def __init__(self, config_ctx: list[ExperimentConfig] | None = None):
        self.config_ctx = config_ctx

    def __getattr__(self, name: str) -> Any:
        lst = self.config_ctx or config_stack()
        for config in reversed(lst):
            value = getattr(config, name)
            if value is not None:
                return value

        return None


config_getter = ConfigGetter()
