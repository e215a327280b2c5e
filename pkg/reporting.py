#!/usr/bin/env python3
# -*- coding: utf-8 -*-
"""
结果报告模块
执行实验套件，写出汇总表（CSV + 对齐文本表）和每个实验条件的迭代记录
"""

import csv
import logging
import os
from typing import Iterable, List, Optional, Sequence

from tabulate import tabulate

from config import Config
from experiments import (
    DEFAULT_CLASSIFICATION_THRESHOLD,
    ConditionResult,
    ConditionStats,
    RecordStatus,
    RunRecord,
    classify_and_aggregate,
    run_condition,
)
from suite_manager import ExperimentSuite

logger = logging.getLogger('rulefact')

SUMMARY_CSV = 'summary.csv'
SUMMARY_TABLE = 'summary.txt'
RECORDS_DIR = 'records'

EXCLUSION_COLUMNS = [
    RecordStatus.EXCLUDED_NO_PATH.value,
    RecordStatus.EXCLUDED_IMMEDIATE.value,
    RecordStatus.EXCLUDED_NON_CONVERGING.value,
    RecordStatus.EXCLUDED_ZERO_ORACLE.value,
    RecordStatus.DROPPED.value,
]
SUMMARY_COLUMNS = ['condition', 'mean', 'median', 'av_high', 'av_low',
                   'ct_high', 'ct_low', 'completions'] + EXCLUSION_COLUMNS
RECORD_COLUMNS = ['seed', 'status', 'error', 'initial_error', 'rules_after_prune', 'source', 'target']


# ==================== 格式化 ====================

def _stat(value: Optional[float]) -> str:
    """汇总统计量保留6位小数，缺失值写空串"""
    return '' if value is None else f"{value:.6f}"


def _exact(value) -> str:
    """迭代记录中的数值原样写出（浮点数可精确读回）"""
    if value is None:
        return ''
    if isinstance(value, float):
        return repr(value)
    return str(value)


def summary_row(name: str, stats: ConditionStats) -> List[str]:
    row = [
        name,
        _stat(stats.mean),
        _stat(stats.median),
        _stat(stats.av_high),
        _stat(stats.av_low),
        str(stats.ct_high),
        str(stats.ct_low),
        str(stats.completions),
    ]
    row.extend(str(stats.exclusions.get(column, 0)) for column in EXCLUSION_COLUMNS)
    return row


def format_summary_table(rows: Sequence[Sequence[str]]) -> str:
    """人工阅读用的对齐表"""
    return tabulate(rows, headers=SUMMARY_COLUMNS, tablefmt='simple', disable_numparse=True) + '\n'


# ==================== 文件读写 ====================

def write_summary(output_dir: str, rows: Sequence[Sequence[str]]):
    """写出 summary.csv 和 summary.txt"""
    with open(os.path.join(output_dir, SUMMARY_CSV), 'w', encoding='utf-8', newline='') as f:
        writer = csv.writer(f, lineterminator='\n')
        writer.writerow(SUMMARY_COLUMNS)
        writer.writerows(rows)
    with open(os.path.join(output_dir, SUMMARY_TABLE), 'w', encoding='utf-8') as f:
        f.write(format_summary_table(rows))


def write_records_csv(path: str, records: Iterable[RunRecord]):
    """写出一个实验条件的全部迭代记录（按迭代序号）"""
    with open(path, 'w', encoding='utf-8', newline='') as f:
        writer = csv.writer(f, lineterminator='\n')
        writer.writerow(RECORD_COLUMNS)
        for r in records:
            writer.writerow([
                _exact(r.seed),
                r.status.value,
                _exact(r.error),
                _exact(r.initial_error),
                _exact(r.rules_after_prune),
                _exact(r.source),
                _exact(r.target),
            ])


def read_records_csv(path: str) -> List[RunRecord]:
    """
    读取迭代记录文件

    Args:
        path: records/<condition>.csv

    Returns:
        RunRecord 列表
    """
    def optional(text: str, cast):
        return cast(text) if text != '' else None

    records = []
    with open(path, 'r', encoding='utf-8', newline='') as f:
        reader = csv.DictReader(f)
        missing = set(RECORD_COLUMNS) - set(reader.fieldnames or [])
        if missing:
            raise ValueError(f"{path}: 记录文件缺少列 {sorted(missing)}")
        for row in reader:
            records.append(RunRecord(
                seed=int(row['seed']),
                status=RecordStatus(row['status']),
                error=optional(row['error'], float),
                rules_after_prune=int(row['rules_after_prune'] or 0),
                source=optional(row['source'], int),
                target=optional(row['target'], int),
                initial_error=optional(row['initial_error'], float),
            ))
    return records


def report_records(path: str, threshold: float = DEFAULT_CLASSIFICATION_THRESHOLD) -> ConditionStats:
    """按新的阈值重新汇总已保存的迭代记录"""
    return classify_and_aggregate(read_records_csv(path), threshold)


# ==================== 套件执行 ====================

def _prepare_output_dir(output_dir: str) -> bool:
    try:
        os.makedirs(os.path.join(output_dir, RECORDS_DIR), exist_ok=True)
    except OSError as e:
        logger.error(f"无法创建输出目录 {output_dir}: {e}")
        return False
    if not os.access(output_dir, os.W_OK):
        logger.error(f"输出目录不可写: {output_dir}")
        return False
    return True


def _save_to_db(suite_name: str, results: Sequence[ConditionResult], db) -> bool:
    try:
        if db is None:
            from database import get_db
            db = get_db()
        for result in results:
            db.save_condition(suite_name, result)
    except Exception as e:
        logger.error(f"保存结果到数据库失败: {e}")
        return False
    logger.info(f"已保存 {len(results)} 个实验条件的结果到数据库")
    return True


def run_suite(suite: ExperimentSuite,
              n_jobs: int = None,
              backend: str = None,
              save_to_db: bool = None,
              db=None) -> int:
    """
    执行实验套件

    每个实验条件写一行汇总，并写出 records/<条件名>.csv。
    同一套件重复执行得到字节相同的文件。

    Args:
        suite: 已解析的实验套件
        n_jobs: 并行进程数，默认 Config.N_JOBS
        backend: joblib 后端，默认 Config.PARALLEL_BACKEND
        save_to_db: 是否保存到结果数据库，默认 Config.SAVE_TO_DB
        db: 结果数据库实例，默认全局实例

    Returns:
        int: 退出状态（0 表示成功）
    """
    n_jobs = Config.N_JOBS if n_jobs is None else n_jobs
    backend = backend or Config.PARALLEL_BACKEND
    save_to_db = Config.SAVE_TO_DB if save_to_db is None else save_to_db

    if not _prepare_output_dir(suite.output_dir):
        return 1

    logger.info(f"执行套件 {suite.name}: {len(suite.conditions)} 个实验条件 -> {suite.output_dir}")
    rows = []
    results = []
    try:
        for condition in suite.conditions:
            result = run_condition(condition, n_jobs=n_jobs, backend=backend)
            results.append(result)
            rows.append(summary_row(condition.name, result.stats))
            write_records_csv(os.path.join(suite.output_dir, RECORDS_DIR, f"{condition.name}.csv"),
                              result.records)
        write_summary(suite.output_dir, rows)
    except OSError as e:
        logger.error(f"写出结果失败: {e}")
        return 1

    logger.info(f"汇总已写出: {os.path.join(suite.output_dir, SUMMARY_CSV)}")

    if save_to_db and not _save_to_db(suite.name, results, db):
        return 2
    return 0
