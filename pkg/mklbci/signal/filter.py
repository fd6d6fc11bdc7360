from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
from scipy import signal as sps

from mklbci.exception import ParameterError
from mklbci.signal.recording import Recording
from mklbci.typing import Matrix, MatrixLike


@dataclass(frozen=True, eq=False)
class BandpassFilter:
    '''
    以二阶节（second-order sections）级联形式表示的 IIR 带通滤波器

    ``sos`` 的每一行为 ``[b0, b1, b2, a0, a1, a2]``
    '''
    sos: Matrix = field(repr=False)
    order: int
    low_hz: float
    high_hz: float
    fs: float

    def response(self, freqs_hz: MatrixLike) -> np.ndarray:
        '''
        在给定频率（Hz）处的复频率响应 ``H(e^{jω})``
        '''
        freqs = np.atleast_1d(np.asarray(freqs_hz, dtype=np.float64))
        _, h = sps.sosfreqz(self.sos, worN=freqs, fs=self.fs)
        return h

    def gain(self, freqs_hz: MatrixLike) -> np.ndarray:
        return np.abs(self.response(freqs_hz))

    def poles(self) -> np.ndarray:
        _, p, _ = sps.sos2zpk(self.sos)
        return p

    def is_stable(self) -> bool:
        return bool(np.all(np.abs(self.poles()) < 1))


def design_butterworth_bandpass(
    order: int,
    low_hz: float,
    high_hz: float,
    fs: float
) -> BandpassFilter:
    '''
    设计 Butterworth 带通滤波器

    模拟原型经频带变换后，使用带频率预畸变的双线性变换离散化，并分解为二阶节，
    两个边缘频率处的增益为 ``1/√2``
    '''
    if order < 1:
        raise ParameterError(f'滤波器阶数必须 >= 1，得到 {order}')
    if not fs > 0:
        raise ParameterError(f'采样率必须为正数，得到 {fs}')
    nyquist = fs / 2
    if not 0 < low_hz < high_hz < nyquist:
        raise ParameterError(
            f'通带边缘必须满足 0 < low < high < fs/2，得到 low={low_hz}, high={high_hz}, fs/2={nyquist}'
        )

    sos = sps.butter(order, [low_hz, high_hz], btype='bandpass', fs=fs, output='sos')
    sos.setflags(write=False)
    return BandpassFilter(sos, int(order), float(low_hz), float(high_hz), float(fs))


def filter_array(f: BandpassFilter, data: MatrixLike) -> Matrix:
    '''
    沿最后一个轴因果地（仅前向）滤波，初始状态为 0
    '''
    return sps.sosfilt(f.sos, np.asarray(data, dtype=np.float64), axis=-1)


def apply_filter(f: BandpassFilter, rec: Recording) -> Recording:
    '''
    对记录的每个通道进行因果滤波，标记与通道名称保持不变
    '''
    if not np.isclose(f.fs, rec.fs, rtol=0, atol=1e-9):
        raise ParameterError(f'滤波器采样率 {f.fs} Hz 与记录采样率 {rec.fs} Hz 不一致')
    return rec.with_data(filter_array(f, rec.data))
