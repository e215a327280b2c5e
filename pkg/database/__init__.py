#!/usr/bin/env python3
# -*- coding: utf-8 -*-
"""
数据库模块
实验结果的持久化（SQLite 默认，MySQL 通过 PyMySQL）
"""

from .database_models import ConditionRun, IterationRecord
from .database_manager import ResultsDB, get_db, init_database
from .db_config import DatabaseConfig, get_database_config, print_config_info

__all__ = [
    'ConditionRun',
    'IterationRecord',
    'ResultsDB',
    'get_db',
    'init_database',
    'DatabaseConfig',
    'get_database_config',
    'print_config_info',
]
