from __future__ import annotations

import json
import os
import time
from xml.sax.saxutils import escape

import pandas as pd
from colour import Color

from mklbci.constants import (BASELINE_COLORS, BASELINE_METHODS, GREY,
                              GREY_A, GREY_D, WHITE)
from mklbci.exception import OutputError
from mklbci.logger import log
from mklbci.pipeline.benchmark import ExperimentReport
from mklbci.utils.file_ops import guarantee_existence, readall

FLOAT_FORMAT = '%.17g'

PANEL_SIZE = 240
MARGIN = 40
MARKER_RADIUS = 4


def _write_text(path: str, text: str) -> None:
    try:
        with open(path, 'wt', encoding='utf-8', newline='\n') as f:
            f.write(text)
    except OSError as e:
        raise OutputError(f'无法写入 "{path}": {e}') from e


def _write_csv(path: str, frame: pd.DataFrame, **kwargs) -> None:
    _write_text(path, frame.to_csv(float_format=FLOAT_FORMAT, lineterminator='\n', **kwargs))


def patterns_table(report: ExperimentReport) -> pd.DataFrame:
    '''
    长表格式：每行为一个被试的一个通道，列为 6 个激活模式
    '''
    columns = ['role', 'subject', 'channel', *(f'pattern{i + 1}' for i in range(6))]
    rows = [
        [entry.role, entry.subject_id, name, *entry.patterns[c].tolist()]
        for entry in report.patterns
        for c, name in enumerate(entry.channel_names)
    ]
    return pd.DataFrame(rows, columns=columns)


def _hex(color: str) -> str:
    return Color(color).hex_l


def scatter_svg(report: ExperimentReport) -> str:
    '''
    每个基线方法一幅散点图：横坐标为基线的测试错误率，纵坐标为多核学习的测试错误率，并画出 y = x

    每个被试对应一个 ``<circle>``，点位于对角线下方表示多核学习更好
    '''
    baselines = [m for m in BASELINE_METHODS if m in report.methods and 'mkl' in report.methods]
    width = MARGIN + len(baselines) * (PANEL_SIZE + MARGIN) if baselines else 2 * MARGIN
    height = PANEL_SIZE + 2 * MARGIN

    lines = [
        f'<svg xmlns="http://www.w3.org/2000/svg" width="{width}" height="{height}" '
        f'viewBox="0 0 {width} {height}">',
        f'<rect x="0" y="0" width="{width}" height="{height}" fill="{_hex(WHITE)}"/>',
    ]

    def to_px(x0: float, value_x: float, value_y: float) -> tuple[float, float]:
        # error rates share a fixed [0, 0.5] range; larger errors are clipped to the border
        scale = PANEL_SIZE / 0.5
        return (
            x0 + min(value_x, 0.5) * scale,
            MARGIN + PANEL_SIZE - min(value_y, 0.5) * scale,
        )

    for k, baseline in enumerate(baselines):
        x0 = MARGIN + k * (PANEL_SIZE + MARGIN)
        color = _hex(BASELINE_COLORS[baseline])
        lines.append(f'<g id="scatter-{baseline}">')
        lines.append(
            f'<rect x="{x0}" y="{MARGIN}" width="{PANEL_SIZE}" height="{PANEL_SIZE}" '
            f'fill="none" stroke="{_hex(GREY_D)}"/>'
        )
        (ax, ay), (bx, by) = to_px(x0, 0, 0), to_px(x0, 0.5, 0.5)
        lines.append(
            f'<line x1="{ax:g}" y1="{ay:g}" x2="{bx:g}" y2="{by:g}" '
            f'stroke="{_hex(GREY_A)}" stroke-dasharray="4 4"/>'
        )
        lines.append(
            f'<text x="{x0 + PANEL_SIZE / 2:g}" y="{MARGIN + PANEL_SIZE + 28}" text-anchor="middle" '
            f'font-size="12" fill="{_hex(GREY)}">{escape(baseline)} error</text>'
        )
        lines.append(
            f'<text x="{x0 - 8}" y="{MARGIN - 12}" font-size="12" fill="{_hex(GREY)}">mkl error</text>'
        )
        for sid, x, y in report.scatter_points(baseline):
            cx, cy = to_px(x0, x, y)
            lines.append(
                f'<circle cx="{cx:.3f}" cy="{cy:.3f}" r="{MARKER_RADIUS}" fill="{color}">'
                f'<title>{escape(sid)}: {x:.3f} / {y:.3f}</title></circle>'
            )
        lines.append('</g>')

    lines.append('</svg>')
    return '\n'.join(lines) + '\n'


def emit_reports(report: ExperimentReport, out_dir: str) -> list[str]:
    '''
    写出实验报告，返回写出的文件路径：

    - ``errors.csv``: 被试、方法、测试错误率、交叉验证错误率与所选的 C、p、λ
    - ``betas.csv``、``alphas.csv``: 方阵，行列均为被试编号，对角线为 0
    - ``patterns.csv``: 平均 β 最大与最小的被试的激活模式
    - ``scatter.svg``: 每个基线方法一幅散点图
    - ``config.json``: 所使用的配置
    - ``report.json``: 完整的结果，可由 :func:`load_report` 读回
    '''
    log.info(f'Writing reports to "{out_dir}"')
    start = time.perf_counter()
    try:
        guarantee_existence(out_dir)
    except OSError as e:
        raise OutputError(f'无法创建输出目录 "{out_dir}": {e}') from e

    def path(name: str) -> str:
        return os.path.join(out_dir, name)

    written = []

    _write_csv(path('errors.csv'), report.error_table(), index=False)
    _write_csv(path('betas.csv'), report.beta_matrix())
    _write_csv(path('alphas.csv'), report.alpha_matrix())
    _write_csv(path('patterns.csv'), patterns_table(report), index=False)
    written += [path(name) for name in ('errors.csv', 'betas.csv', 'alphas.csv', 'patterns.csv')]

    _write_text(path('scatter.svg'), scatter_svg(report))
    _write_text(path('config.json'), json.dumps(report.config, indent=2) + '\n')
    _write_text(path('report.json'), json.dumps(report.to_dict(), indent=2) + '\n')
    written += [path(name) for name in ('scatter.svg', 'config.json', 'report.json')]

    elapsed = time.perf_counter() - start
    log.info(f'Finished writing {len(written)} files in {elapsed:.2f} s')
    return written


def load_report(in_dir: str) -> ExperimentReport:
    path = os.path.join(in_dir, 'report.json')
    try:
        data = json.loads(readall(path))
    except FileNotFoundError as e:
        raise OutputError(f'"{path}" 不存在') from e
    except (OSError, json.JSONDecodeError) as e:
        raise OutputError(f'无法读取 "{path}": {e}') from e
    try:
        return ExperimentReport.from_dict(data)
    except (KeyError, TypeError, ValueError) as e:
        raise OutputError(f'"{path}" 的内容有误: {e}') from e


def read_matrix(path: str) -> pd.DataFrame:
    '''
    读回 ``betas.csv`` 或 ``alphas.csv``
    '''
    return pd.read_csv(path, index_col=0, float_precision='round_trip')
