#!/usr/bin/env python3
# -*- coding: utf-8 -*-
"""
实验结果数据库工具
提供实验条件统计和迭代记录的存取接口
"""

import json
import logging
import os
from contextlib import contextmanager
from typing import Any, Dict, List, Optional

from sqlalchemy import create_engine, func
from sqlalchemy.orm import sessionmaker

from .database_models import Base, ConditionRun, IterationRecord
from .db_config import DatabaseConfig

logger = logging.getLogger('rulefact')


class ResultsDB:
    """实验结果数据库操作类"""

    def __init__(self, database_url: str = None):
        """
        初始化数据库连接

        Args:
            database_url: 数据库连接URL，如果为None则从环境变量读取
        """
        if database_url is None:
            database_url = DatabaseConfig.from_env().url

        self.engine = create_engine(database_url, echo=False)
        self._session_factory = sessionmaker(autocommit=False, autoflush=False, bind=self.engine)
        self._init_database()

    def _init_database(self):
        """初始化数据库"""
        try:
            Base.metadata.create_all(bind=self.engine)
            logger.debug("结果数据库初始化成功")
        except Exception as e:
            logger.error(f"结果数据库初始化失败: {e}")
            raise

    @contextmanager
    def get_session(self):
        """获取数据库会话的上下文管理器"""
        session = self._session_factory()
        try:
            yield session
            session.commit()
        except Exception as e:
            session.rollback()
            raise e
        finally:
            session.close()

    # ==================== 写入 ====================

    def save_condition(self, suite_name: str, result) -> int:
        """
        保存一个实验条件的统计结果和全部迭代记录

        Args:
            suite_name: 套件名称
            result: experiments.ConditionResult

        Returns:
            int: 新记录的ID
        """
        stats = result.stats
        with self.get_session() as session:
            run = ConditionRun(
                suite=suite_name,
                condition=result.config.name,
                config=json.dumps(result.config.to_dict(), ensure_ascii=False, sort_keys=True),
                iterations=stats.iterations,
                mean=stats.mean,
                median=stats.median,
                av_high=stats.av_high,
                av_low=stats.av_low,
                ct_high=stats.ct_high,
                ct_low=stats.ct_low,
                completions=stats.completions,
                exclusions=json.dumps(stats.exclusions, sort_keys=True),
            )
            for position, record in enumerate(result.records):
                run.records.append(IterationRecord(
                    position=position,
                    seed=record.seed,
                    status=record.status.value,
                    error=record.error,
                    initial_error=record.initial_error,
                    rules_after_prune=record.rules_after_prune,
                    source=record.source,
                    target=record.target,
                ))
            session.add(run)
            session.flush()
            return run.id

    # ==================== 查询 ====================

    def get_condition_stats(self, suite_name: str = None, condition: str = None) -> List[Dict[str, Any]]:
        """按套件和条件名查询统计结果，最新的在前"""
        with self.get_session() as session:
            query = session.query(ConditionRun)
            if suite_name is not None:
                query = query.filter(ConditionRun.suite == suite_name)
            if condition is not None:
                query = query.filter(ConditionRun.condition == condition)
            runs = query.order_by(ConditionRun.id.desc()).all()
            return [run.to_dict() for run in runs]

    def get_run_records(self, condition_run_id: int) -> Optional[List[Dict[str, Any]]]:
        """获取某次条件运行的全部迭代记录（按迭代序号）"""
        with self.get_session() as session:
            run = session.query(ConditionRun).filter(ConditionRun.id == condition_run_id).first()
            if not run:
                return None
            return [record.to_dict() for record in run.records]

    def status_counts(self, condition_run_id: int) -> Dict[str, int]:
        """按迭代状态统计某次条件运行的记录数"""
        with self.get_session() as session:
            rows = (session.query(IterationRecord.status, func.count(IterationRecord.id))
                    .filter(IterationRecord.condition_run_id == condition_run_id)
                    .group_by(IterationRecord.status)
                    .all())
            return {status: count for status, count in rows}

    def delete_suite(self, suite_name: str) -> int:
        """删除一个套件的全部结果"""
        with self.get_session() as session:
            runs = session.query(ConditionRun).filter(ConditionRun.suite == suite_name).all()
            for run in runs:
                session.delete(run)
            return len(runs)

    # ==================== 导出 ====================

    def export_to_json(self, json_data_dir: str, suite_name: str = None) -> str:
        """从数据库导出统计结果到JSON文件"""
        os.makedirs(json_data_dir, exist_ok=True)
        filename = f"{suite_name or 'all'}_results.json"
        path = os.path.join(json_data_dir, filename)

        payload = []
        for stats in self.get_condition_stats(suite_name):
            stats['records'] = self.get_run_records(stats['id'])
            payload.append(stats)

        with open(path, 'w', encoding='utf-8') as f:
            json.dump(payload, f, ensure_ascii=False, indent=2)
        logger.info(f"导出了 {len(payload)} 条实验条件结果到 {path}")
        return path

    def close(self):
        """关闭数据库连接"""
        self.engine.dispose()


# 全局数据库实例
_db_instance = None


def get_db() -> ResultsDB:
    """获取数据库实例（单例模式）"""
    global _db_instance
    if _db_instance is None:
        _db_instance = ResultsDB()
    return _db_instance


def init_database(database_url: str = None) -> ResultsDB:
    """初始化数据库"""
    global _db_instance
    _db_instance = ResultsDB(database_url)
    return _db_instance
