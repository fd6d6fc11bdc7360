from __future__ import annotations

import json
import math
import os
import time
from concurrent.futures import ThreadPoolExecutor
from dataclasses import asdict, dataclass, field, fields
from typing import Literal, Self

import numpy as np

from mklbci.classifiers.metrics import error_rate
from mklbci.constants import DEFAULT_BAND, DEFAULT_FILTER_ORDER, LEFT, RIGHT
from mklbci.exception import ConfigError, ParameterError
from mklbci.linalg.covariance import CovMatrix
from mklbci.logger import log
from mklbci.signal.filter import design_butterworth_bandpass, filter_array
from mklbci.signal.recording import Marker, Recording, Trial, ms_to_samples
from mklbci.typing import Matrix, SubjectId

type Group = Literal['target', 'similar', 'dissimilar']

DISCRIMINATIVE = (0, 1)
PERTURBATION_NORM = 0.15


@dataclass(kw_only=True)
class CohortSpec:
    '''
    合成被试群体的参数

    - ``n_subjects``: 被试数 m（包括目标被试，即第一个被试）
    - ``similar_fraction``: 其余被试中与目标被试共享判别子空间的比例
    - ``gain_ratio``: 判别源在其对应类别中的功率增益
    - ``noise_level``: 空间相关噪声的幅度 σ
    - ``n_sources``: 源的数量，默认与通道数相同，不能多于通道数
    - 试次时间轴：提示后 ``onset_ms`` 开始持续 ``trial_length_ms`` 的想象期，之后休息 ``rest_ms``；
      记录开头有 ``lead_ms`` 的空白
    '''
    n_subjects: int = 10
    channels: int = 16
    fs: float = 100.0
    trials_per_class: int = 50
    test_trials_per_class: int = 50
    trial_length_ms: float = 3000.0
    onset_ms: float = 500.0
    rest_ms: float = 2000.0
    lead_ms: float = 2000.0
    seed: int = 0
    similar_fraction: float = 1 / 3
    gain_ratio: float = 3.0
    noise_level: float = 1.0
    n_sources: int | None = None

    @property
    def sources(self) -> int:
        return self.channels if self.n_sources is None else self.n_sources

    @property
    def n_similar(self) -> int:
        return int(round(self.similar_fraction * (self.n_subjects - 1)))

    def subject_ids(self) -> list[SubjectId]:
        width = max(2, len(str(self.n_subjects)))
        return [f'S{i + 1:0{width}d}' for i in range(self.n_subjects)]

    def group_of(self, index: int) -> Group:
        if index == 0:
            return 'target'
        return 'similar' if index <= self.n_similar else 'dissimilar'

    def validate(self) -> None:
        if self.n_subjects < 2:
            raise ParameterError(f'被试数至少为 2，得到 {self.n_subjects}')
        if self.sources < len(DISCRIMINATIVE):
            raise ParameterError(f'源的数量至少为 {len(DISCRIMINATIVE)}，得到 {self.sources}')
        if self.sources > self.channels:
            raise ParameterError(f'源的数量 {self.sources} 多于通道数 {self.channels}，混合矩阵无法列满秩')
        if self.trials_per_class < 1 or self.test_trials_per_class < 0:
            raise ParameterError('每类试次数必须为正数')
        if not 0 <= self.similar_fraction <= 1:
            raise ParameterError(f'similar_fraction 必须位于 [0, 1]，得到 {self.similar_fraction}')
        if not self.gain_ratio > 0:
            raise ParameterError(f'gain_ratio 必须为正数，得到 {self.gain_ratio}')
        if self.noise_level < 0:
            raise ParameterError(f'noise_level 不能为负数，得到 {self.noise_level}')
        if self.trial_length_ms <= 0 or self.onset_ms < 0 or self.rest_ms < 0 or self.lead_ms < 0:
            raise ParameterError('试次时间参数有误')

    def to_dict(self) -> dict:
        return asdict(self)

    @classmethod
    def from_dict(cls, data: dict) -> Self:
        known = {f.name for f in fields(cls)}
        unknown = sorted(set(data) - known)
        if unknown:
            raise ConfigError(f'cohort spec 中含有未知的键: {unknown}')
        return cls(**data)

    @classmethod
    def from_json(cls, path: str) -> Self:
        try:
            with open(path, 'rt', encoding='utf-8') as f:
                data = json.load(f)
        except (OSError, json.JSONDecodeError) as e:
            raise ConfigError(f'无法读取 cohort spec "{path}": {e}') from e
        if not isinstance(data, dict):
            raise ConfigError(f'cohort spec "{path}" 的顶层必须是 JSON 对象')
        return cls.from_dict(data)


@dataclass(frozen=True, eq=False)
class SubjectModel:
    '''
    一个合成被试的前向模型

    - ``mixing``: 通道 × 源 的混合矩阵 A，列满秩且各列为单位向量
    - ``discriminative``: 两个判别源的序号，前者在 +1 类中增强，后者在 -1 类中增强
    - ``gains``: 2 × 源，第 0 行为 +1 类的功率增益，第 1 行为 -1 类的
    - ``noise_sqrt``: 噪声协方差 N 的对称平方根 R（``trace(N)/通道数 = 1``）
    '''
    subject_id: SubjectId
    mixing: Matrix = field(repr=False)
    discriminative: tuple[int, int]
    gains: Matrix = field(repr=False)
    noise_level: float
    noise_sqrt: Matrix = field(repr=False)
    group: Group

    def __post_init__(self) -> None:
        if np.linalg.matrix_rank(self.mixing) < self.mixing.shape[1]:
            raise ParameterError(f'被试 {self.subject_id} 的混合矩阵不是列满秩的')
        if np.any(self.gains <= 0):
            raise ParameterError('源的功率增益必须为正数')
        if self.noise_level < 0:
            raise ParameterError('噪声幅度不能为负数')

    @property
    def channels(self) -> int:
        return self.mixing.shape[0]

    def gains_of(self, label: int) -> np.ndarray:
        return self.gains[0 if label == LEFT else 1]

    def noise_covariance(self) -> Matrix:
        return self.noise_sqrt @ self.noise_sqrt.T

    def class_covariance(self, label: int) -> CovMatrix:
        '''
        该类别的总体（期望）通道协方差 ``A·diag(g_c)·Aᵀ + σ²·N``
        '''
        a = self.mixing
        cov = (a * self.gains_of(label)) @ a.T + self.noise_level ** 2 * self.noise_covariance()
        return CovMatrix((cov + cov.T) / 2)

    def unmixing(self) -> Matrix:
        '''
        两个判别源的真实解混行向量（``pinv(A)`` 的对应行），形状为 2 × 通道
        '''
        return np.linalg.pinv(self.mixing)[list(self.discriminative)]

    def save(self, path: str) -> None:
        np.savez(
            path,
            mixing=self.mixing,
            discriminative=np.array(self.discriminative),
            gains=self.gains,
            noise_level=np.array(self.noise_level),
            noise_sqrt=self.noise_sqrt,
            subject_id=np.array(self.subject_id),
            group=np.array(self.group),
        )

    @staticmethod
    def load(path: str) -> SubjectModel:
        with np.load(path) as npz:
            return SubjectModel(
                subject_id=str(npz['subject_id']),
                mixing=npz['mixing'],
                discriminative=tuple(int(i) for i in npz['discriminative']),
                gains=npz['gains'],
                noise_level=float(npz['noise_level']),
                noise_sqrt=npz['noise_sqrt'],
                group=str(npz['group']),
            )


@dataclass(frozen=True, eq=False)
class SyntheticSubject:
    calibration: Recording
    test: Recording
    model: SubjectModel


def _unit_columns(m: Matrix) -> Matrix:
    return m / np.linalg.norm(m, axis=0)


def _prototype(spec: CohortSpec) -> Matrix:
    rng = np.random.default_rng(np.random.SeedSequence([spec.seed, 0]))
    q, _ = np.linalg.qr(rng.standard_normal((spec.channels, len(DISCRIMINATIVE))))
    return q


def _mixing_matrix(rng: np.random.Generator, spec: CohortSpec, prototype: Matrix, group: Group) -> Matrix:
    n_disc = len(DISCRIMINATIVE)
    match group:
        case 'target':
            disc = prototype
        case 'similar':
            delta = rng.standard_normal((spec.channels, n_disc))
            delta *= PERTURBATION_NORM / np.linalg.norm(delta, axis=0)
            disc = _unit_columns(prototype + delta)
        case _:
            disc = _unit_columns(rng.standard_normal((spec.channels, n_disc)))

    # remaining sources span an orthonormal complement of the discriminative pair
    basis, _ = np.linalg.qr(np.hstack([disc, rng.standard_normal((spec.channels, spec.sources - n_disc))]))
    return np.hstack([disc, basis[:, n_disc:spec.sources]])


def _noise_sqrt(rng: np.random.Generator, channels: int) -> Matrix:
    b = rng.standard_normal((channels, channels))
    cov = b @ b.T / channels + np.eye(channels)
    cov *= channels / np.trace(cov)
    values, vectors = np.linalg.eigh(cov)
    return (vectors * np.sqrt(values)) @ vectors.T


def _labels(rng: np.random.Generator, per_class: int) -> np.ndarray:
    return rng.permutation(np.repeat([LEFT, RIGHT], per_class))


def _session(rng: np.random.Generator, spec: CohortSpec, model: SubjectModel, per_class: int) -> Recording:
    fs = spec.fs
    lead = ms_to_samples(spec.lead_ms, fs)
    onset = ms_to_samples(spec.onset_ms, fs)
    length = ms_to_samples(spec.trial_length_ms, fs)
    period = onset + length + ms_to_samples(spec.rest_ms, fs)

    labels = _labels(rng, per_class)
    n_samples = lead + len(labels) * period + lead

    band = design_butterworth_bandpass(DEFAULT_FILTER_ORDER, *DEFAULT_BAND, fs)
    sources = filter_array(band, rng.standard_normal((spec.sources, n_samples)))
    sources /= sources.std(axis=1, keepdims=True)

    markers = []
    for k, label in enumerate(labels):
        cue = lead + k * period
        active = slice(cue + onset, cue + onset + length)
        sources[:, active] *= np.sqrt(model.gains_of(label))[:, None]
        markers.append(Marker(cue, int(label)))

    noise = rng.standard_normal((spec.channels, n_samples))
    data = model.mixing @ sources + model.noise_level * (model.noise_sqrt @ noise)

    width = max(2, len(str(spec.channels)))
    names = tuple(f'ch{i + 1:0{width}d}' for i in range(spec.channels))
    return Recording(data, fs, names, tuple(markers))


def generate_subject(spec: CohortSpec, index: int, prototype: Matrix | None = None) -> SyntheticSubject:
    '''
    生成第 ``index`` 个被试（从 0 开始，0 为目标被试）

    随机数种子由 ``(spec.seed, index + 1)`` 派生，因此与其他被试的生成相互独立
    '''
    if prototype is None:
        prototype = _prototype(spec)
    model_ss, calib_ss, test_ss = np.random.SeedSequence([spec.seed, index + 1]).spawn(3)
    rng = np.random.default_rng(model_ss)

    group = spec.group_of(index)
    gains = np.ones((2, spec.sources))
    gains[0, DISCRIMINATIVE[0]] = spec.gain_ratio
    gains[1, DISCRIMINATIVE[1]] = spec.gain_ratio

    model = SubjectModel(
        subject_id=spec.subject_ids()[index],
        mixing=_mixing_matrix(rng, spec, prototype, group),
        discriminative=DISCRIMINATIVE,
        gains=gains,
        noise_level=float(spec.noise_level),
        noise_sqrt=_noise_sqrt(rng, spec.channels),
        group=group,
    )
    return SyntheticSubject(
        calibration=_session(np.random.default_rng(calib_ss), spec, model, spec.trials_per_class),
        test=_session(np.random.default_rng(test_ss), spec, model, spec.test_trials_per_class),
        model=model,
    )


def generate_cohort(spec: CohortSpec, *, workers: int = 1) -> dict[SubjectId, SyntheticSubject]:
    '''
    生成整个合成被试群体

    - 第一个被试为目标被试，其判别源的混合列为原型列
    - ``similar`` 组被试的判别列为原型列加上范数为 0.15 的扰动（再归一化）
    - ``dissimilar`` 组被试的判别列是独立随机的
    - 判别源在其对应类别的想象期内功率乘以 ``gain_ratio``；
      所有源都是经过 8~30 Hz Butterworth 滤波、并归一化为单位标准差的白噪声

    结果完全由 ``spec`` （包括 ``seed``）决定
    '''
    spec.validate()
    log.info(f'Generating cohort of {spec.n_subjects} subjects (seed={spec.seed})')
    start = time.perf_counter()

    prototype = _prototype(spec)
    indices = range(spec.n_subjects)
    if workers > 1:
        with ThreadPoolExecutor(max_workers=workers) as executor:
            subjects = list(executor.map(lambda i: generate_subject(spec, i, prototype), indices))
    else:
        subjects = [generate_subject(spec, i, prototype) for i in indices]

    elapsed = time.perf_counter() - start
    log.info(f'Finished generating cohort in {elapsed:.2f} s')
    return {subject.model.subject_id: subject for subject in subjects}


def _log_variance_difference(unmix: Matrix, data: Matrix) -> float:
    var = np.var(unmix @ data, axis=1)
    return float(np.log(var[0]) - np.log(var[1]))


def bayes_reference_error(model: SubjectModel, trials: list[Trial]) -> float:
    '''
    使用真实解混向量与真实增益的参考分类器的错误率

    特征为两个判别源对数方差之差，阈值取两类特征期望值（由总体协方差得到）的中点
    '''
    unmix = model.unmixing()

    def expected(label: int) -> float:
        cov = model.class_covariance(label).data
        power = np.einsum('ic,cd,id->i', unmix, cov, unmix)
        return float(math.log(power[0]) - math.log(power[1]))

    pos, neg = expected(LEFT), expected(RIGHT)
    threshold = (pos + neg) / 2
    direction = 1.0 if pos >= neg else -1.0

    features = np.array([_log_variance_difference(unmix, trial.data) for trial in trials])
    predicted = np.where(direction * (features - threshold) >= 0, LEFT, RIGHT)
    return error_rate(predicted, [trial.label for trial in trials])


def save_spec(spec: CohortSpec, subject_ids: list[SubjectId], out_dir: str) -> str:
    path = os.path.join(out_dir, 'cohort.json')
    with open(path, 'wt', encoding='utf-8') as f:
        json.dump({'spec': spec.to_dict(), 'subjects': subject_ids}, f, indent=2)
    return path
