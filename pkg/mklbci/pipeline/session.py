from __future__ import annotations

import glob
import json
import os
import struct
from dataclasses import dataclass
from typing import Mapping

import numpy as np

from mklbci.constants import LABELS
from mklbci.exception import SessionFormatError, SessionValidationError
from mklbci.logger import log
from mklbci.signal.recording import Marker, Recording
from mklbci.typing import SubjectId
from mklbci.utils.file_ops import guarantee_existence, readall, readbytes

META_SUFFIX = '.eegmeta.json'
DATA_SUFFIX = '.eegdata'

MAGIC = b'EEGS'
VERSION = 1
HEADER = struct.Struct('<4sIIQ')
'''magic, version (u32), n_channels (u32), n_samples (u64)'''


@dataclass(frozen=True)
class SubjectSessions:
    '''
    一个被试的训练（calibration）会话与测试会话；测试会话可以缺失
    '''
    calibration: Recording
    test: Recording | None = None


type Cohort = dict[SubjectId, SubjectSessions]


def session_paths(path: str) -> tuple[str, str]:
    '''
    由 ``<name>``、``<name>.eegmeta.json`` 或 ``<name>.eegdata`` 得到元数据文件与数据文件的路径
    '''
    for suffix in (META_SUFFIX, DATA_SUFFIX):
        if path.endswith(suffix):
            path = path[:-len(suffix)]
            break
    return path + META_SUFFIX, path + DATA_SUFFIX


def save_session(rec: Recording, path: str) -> str:
    '''
    把记录写为 ``<name>.eegmeta.json`` 与 ``<name>.eegdata`` 两个文件，返回元数据文件的路径
    '''
    meta_path, data_path = session_paths(path)
    directory = os.path.dirname(meta_path)
    if directory:
        guarantee_existence(directory)

    meta = {
        'fs': rec.fs,
        'channel_names': list(rec.channel_names),
        'markers': [{'sample': m.sample, 'label': m.label} for m in rec.markers],
        'data_file': os.path.basename(data_path),
    }
    try:
        with open(meta_path, 'wt', encoding='utf-8') as f:
            json.dump(meta, f, indent=2)
        with open(data_path, 'wb') as f:
            f.write(HEADER.pack(MAGIC, VERSION, rec.n_channels, rec.n_samples))
            f.write(np.ascontiguousarray(rec.data, dtype='<f8').tobytes())
    except OSError as e:
        raise SessionFormatError(f'无法写入会话 "{meta_path}": {e}') from e

    return meta_path


def _read_meta(meta_path: str) -> dict:
    try:
        meta = json.loads(readall(meta_path))
    except FileNotFoundError as e:
        raise SessionFormatError(f'会话元数据文件 "{meta_path}" 不存在') from e
    except (OSError, UnicodeDecodeError, json.JSONDecodeError) as e:
        raise SessionFormatError(f'无法解析会话元数据 "{meta_path}": {e}') from e

    if not isinstance(meta, dict):
        raise SessionFormatError(f'会话元数据 "{meta_path}" 的顶层必须是 JSON 对象')

    fs = meta.get('fs')
    if isinstance(fs, bool) or not isinstance(fs, (int, float)):
        raise SessionFormatError(f'会话元数据 "{meta_path}" 缺少数值字段 fs')
    names = meta.get('channel_names')
    if not isinstance(names, list) or not all(isinstance(name, str) for name in names):
        raise SessionFormatError(f'会话元数据 "{meta_path}" 的 channel_names 必须是字符串数组')
    if not isinstance(meta.get('data_file'), str):
        raise SessionFormatError(f'会话元数据 "{meta_path}" 缺少字符串字段 data_file')

    markers = meta.get('markers')
    if not isinstance(markers, list):
        raise SessionFormatError(f'会话元数据 "{meta_path}" 的 markers 必须是数组')
    for idx, marker in enumerate(markers):
        if (
            not isinstance(marker, dict)
            or any(isinstance(marker.get(key), bool) or not isinstance(marker.get(key), int)
                   for key in ('sample', 'label'))
        ):
            raise SessionFormatError(f'会话元数据 "{meta_path}" 的标记 #{idx} 必须包含整数 sample 与 label')
        if marker['label'] not in LABELS:
            raise SessionValidationError(f'标记 #{idx} 的标签 {marker["label"]} 不是 +1 或 -1')

    return meta


def _read_data(data_path: str, n_names: int):
    try:
        buf = readbytes(data_path)
    except FileNotFoundError as e:
        raise SessionFormatError(f'会话数据文件 "{data_path}" 不存在') from e
    except OSError as e:
        raise SessionFormatError(f'无法读取会话数据 "{data_path}": {e}') from e

    if len(buf) < HEADER.size:
        raise SessionFormatError(
            f'数据文件 "{data_path}" 的文件头不完整: 需要 {HEADER.size} 字节，实际只有 {len(buf)} 字节',
            offset=len(buf)
        )

    magic, version, n_channels, n_samples = HEADER.unpack_from(buf)
    if magic != MAGIC:
        raise SessionFormatError(f'数据文件 "{data_path}" 的魔数有误: {magic!r}', offset=0)
    if version != VERSION:
        raise SessionFormatError(f'数据文件 "{data_path}" 的版本 {version} 不受支持', offset=4)
    if n_channels != n_names:
        raise SessionFormatError(
            f'数据文件 "{data_path}" 的通道数 {n_channels} 与元数据中的通道名称数量 {n_names} 不一致',
            offset=8
        )

    expected = HEADER.size + 8 * n_channels * n_samples
    if len(buf) != expected:
        raise SessionFormatError(
            f'数据文件 "{data_path}" 的大小有误: 应为 {expected} 字节，实际为 {len(buf)} 字节',
            offset=min(len(buf), expected)
        )

    return np.frombuffer(buf, dtype='<f8', offset=HEADER.size).reshape(n_channels, n_samples).astype(np.float64)


def load_session(path: str) -> Recording:
    '''
    读取会话，并检查魔数、版本、形状以及标记的范围

    - 格式错误抛出 :class:`~.SessionFormatError` （带有出错的字节偏移）
    - 标记越界或标签不为 ±1 抛出 :class:`~.SessionValidationError`
    '''
    meta_path, _ = session_paths(path)
    meta = _read_meta(meta_path)
    data_path = os.path.join(os.path.dirname(meta_path), meta['data_file'])
    data = _read_data(data_path, len(meta['channel_names']))

    if not meta['fs'] > 0:
        raise SessionValidationError(f'会话 "{meta_path}" 的采样率 {meta["fs"]} 不是正数')
    return Recording(
        data,
        float(meta['fs']),
        tuple(meta['channel_names']),
        tuple(Marker(m['sample'], m['label']) for m in meta['markers'])
    )


def validate_session(path: str) -> Recording:
    rec = load_session(path)
    log.info(
        f'Session "{path}" OK: {rec.n_channels} channels, {rec.n_samples} samples, '
        f'{len(rec.markers)} markers, fs={rec.fs:g} Hz'
    )
    return rec


def save_cohort(subjects: Mapping[SubjectId, object], out_dir: str) -> None:
    '''
    写出合成被试群体：``<id>_calib.*``、``<id>_test.*`` 以及 ``<id>.model.npz``

    ``subjects`` 的值为 :class:`~.SyntheticSubject` （或任何具有 ``calibration``/``test``/``model`` 的对象）
    '''
    guarantee_existence(out_dir)
    for subject_id, subject in subjects.items():
        save_session(subject.calibration, os.path.join(out_dir, f'{subject_id}_calib'))
        if subject.test is not None:
            save_session(subject.test, os.path.join(out_dir, f'{subject_id}_test'))
        model = getattr(subject, 'model', None)
        if model is not None:
            model.save(os.path.join(out_dir, f'{subject_id}.model.npz'))


def _subject_ids(cohort_dir: str) -> list[SubjectId]:
    listing = os.path.join(cohort_dir, 'cohort.json')
    if os.path.exists(listing):
        try:
            return [str(s) for s in json.loads(readall(listing))['subjects']]
        except (KeyError, TypeError, json.JSONDecodeError) as e:
            raise SessionFormatError(f'无法解析 "{listing}": {e}') from e

    suffix = '_calib' + META_SUFFIX
    found = glob.glob(os.path.join(glob.escape(cohort_dir), '*' + suffix))
    return sorted(os.path.basename(path)[:-len(suffix)] for path in found)


def load_cohort(cohort_dir: str) -> Cohort:
    '''
    读取 ``cohort_dir`` 中所有被试的会话；某个被试缺少测试会话时其 ``test`` 为 ``None``
    '''
    if not os.path.isdir(cohort_dir):
        raise SessionFormatError(f'被试群体目录 "{cohort_dir}" 不存在')

    cohort: Cohort = {}
    for subject_id in _subject_ids(cohort_dir):
        calibration = load_session(os.path.join(cohort_dir, f'{subject_id}_calib'))
        test_base = os.path.join(cohort_dir, f'{subject_id}_test')
        test = load_session(test_base) if os.path.exists(test_base + META_SUFFIX) else None
        cohort[subject_id] = SubjectSessions(calibration, test)

    if not cohort:
        raise SessionFormatError(f'目录 "{cohort_dir}" 中没有找到任何会话')
    log.info(f'Loaded {len(cohort)} subjects from "{cohort_dir}"')
    return cohort
