import os
import logging
from dotenv import load_dotenv

load_dotenv()

LOG_FORMAT = '%(asctime)s - %(name)s - %(levelname)s - %(message)s'
LOG_DATEFMT = '%Y-%m-%d %H:%M:%S'


class Config:
    # 目录配置
    BASE_DIR = os.path.dirname(os.path.abspath(__file__))
    DATA_DIR = os.getenv('RULEFACT_DATA_DIR', os.path.join(BASE_DIR, 'data'))
    SUITES_DIR = os.getenv('RULEFACT_SUITES_DIR', os.path.join(BASE_DIR, 'suites'))

    # 并行执行
    N_JOBS = int(os.getenv('RULEFACT_N_JOBS', '1'))
    PARALLEL_BACKEND = os.getenv('RULEFACT_PARALLEL_BACKEND', 'loky')

    # 日志
    LOG_LEVEL = os.getenv('RULEFACT_LOG_LEVEL', 'INFO').upper()

    # 结果数据库
    SAVE_TO_DB = os.getenv('RULEFACT_SAVE_TO_DB', 'False').lower() == 'true'


def configure_logging(level: str = None):
    """按统一格式初始化 'rulefact' 日志"""
    logging.basicConfig(
        level=getattr(logging, (level or Config.LOG_LEVEL).upper(), logging.INFO),
        format=LOG_FORMAT,
        datefmt=LOG_DATEFMT,
    )
    return logging.getLogger('rulefact')
