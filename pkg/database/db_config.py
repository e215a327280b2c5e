#!/usr/bin/env python3
# -*- coding: utf-8 -*-
"""
结果数据库的连接配置（DB_* 环境变量）
"""

import os
from dataclasses import asdict, dataclass
from typing import Any, Dict

from sqlalchemy.engine import URL
from tabulate import tabulate

SUPPORTED_TYPES = ('sqlite', 'mysql')


@dataclass(frozen=True)
class DatabaseConfig:
    """结果数据库连接参数；sqlite 只使用 database 字段"""
    type: str = 'sqlite'
    database: str = 'rulefact.db'
    host: str = 'localhost'
    port: int = 3306
    user: str = 'root'
    password: str = ''
    charset: str = 'utf8mb4'

    @classmethod
    def from_env(cls) -> 'DatabaseConfig':
        """
        从环境变量读取配置

        Raises:
            ValueError: DB_TYPE 不受支持或 DB_PORT 不是整数
        """
        db_type = os.getenv('DB_TYPE', 'sqlite').lower()
        if db_type not in SUPPORTED_TYPES:
            raise ValueError(f"不支持的数据库类型: {db_type}")
        try:
            port = int(os.getenv('DB_PORT', '3306'))
        except ValueError:
            raise ValueError(f"DB_PORT 必须是整数: {os.getenv('DB_PORT')}")
        return cls(
            type=db_type,
            database=os.getenv('DB_NAME', 'rulefact' if db_type == 'mysql' else 'rulefact.db'),
            host=os.getenv('DB_HOST', 'localhost'),
            port=port,
            user=os.getenv('DB_USER', 'root'),
            password=os.getenv('DB_PASSWORD', ''),
            charset=os.getenv('DB_CHARSET', 'utf8mb4'),
        )

    @property
    def url(self) -> str:
        """SQLAlchemy 连接URL；sqlite 的 :memory: 对应内存库，密码中的特殊字符会被转义"""
        if self.type not in SUPPORTED_TYPES:
            raise ValueError(f"不支持的数据库类型: {self.type}")
        if self.type == 'sqlite':
            database = None if self.database == ':memory:' else self.database
            url = URL.create('sqlite', database=database)
        else:
            url = URL.create('mysql+pymysql', username=self.user, password=self.password,
                             host=self.host, port=self.port, database=self.database,
                             query={'charset': self.charset})
        return url.render_as_string(hide_password=False)

    def masked(self) -> Dict[str, Any]:
        """配置字典，密码替换为星号；sqlite 不列出连接字段"""
        info = asdict(self)
        if self.type == 'sqlite':
            return {'type': info['type'], 'database': info['database']}
        if info['password']:
            info['password'] = '*' * len(info['password'])
        return info


def get_database_config() -> DatabaseConfig:
    """读取当前环境的数据库配置"""
    return DatabaseConfig.from_env()


def print_config_info():
    """打印配置信息"""
    info = get_database_config().masked()
    print("=== 数据库配置信息 ===")
    print(tabulate(list(info.items()), tablefmt='plain'))
