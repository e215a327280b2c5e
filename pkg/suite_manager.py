"""
实验套件管理模块
负责加载、校验和管理实验套件文件（YAML）
"""

import os
import re
from dataclasses import dataclass, field
from typing import Any, Dict, List, Mapping, Optional

import yaml

from config import Config
from experiments import (
    DEFAULT_CLASSIFICATION_THRESHOLD,
    DEFAULT_ITERATIONS,
    ConditionConfig,
    OracleKind,
    OracleSpec,
)
from generators import DEFAULT_BOUNDARY_WIDTH, TopologyKind, TopologySpec
from pruning import PruneConfig, PruneKind, PruneScope
from trainer import TrainingApproach, TrainingConfig


class SuiteNotFoundError(FileNotFoundError):
    """套件文件不存在"""


class SuiteFormatError(ValueError):
    """套件文件格式错误（空文件、YAML语法、未知键、类型错误）"""


class SuiteValidationError(ValueError):
    """套件内容违反不变量"""


TOP_KEYS = {'suite', 'output_dir', 'defaults', 'conditions'}
CONDITION_KEYS = {'name', 'topology', 'oracle', 'training', 'prune', 'iterations',
                  'seed', 'threshold', 'copy_weights', 'weight_noise'}
SECTION_KEYS = {
    'topology': {'kind', 'facts', 'rules', 'density', 'depth', 'width', 'boundary_width'},
    'oracle': {'facts', 'rules'},
    'training': {'approach', 'epochs', 'velocity'},
    'prune': {'kind', 'epoch', 'threshold', 'scope', 'filtering'},
}
NAME_PATTERN = re.compile(r'^[A-Za-z0-9_.-]+$')


@dataclass
class ExperimentSuite:
    name: str
    conditions: List[ConditionConfig] = field(default_factory=list)
    output_dir: str = ''
    source_path: Optional[str] = None


# ==================== 取值辅助 ====================

def _check_keys(mapping: Any, allowed: set, where: str) -> Dict[str, Any]:
    if not isinstance(mapping, dict):
        raise SuiteFormatError(f"{where} 必须是映射")
    for key in mapping:
        if key not in allowed:
            raise SuiteFormatError(f"{where} 中存在未知键: '{key}'（可用键: {', '.join(sorted(allowed))}）")
    return mapping


def _int(value: Any, where: str) -> Optional[int]:
    if value is None:
        return None
    if isinstance(value, bool) or not isinstance(value, int):
        raise SuiteFormatError(f"{where} 必须是整数: {value!r}")
    return value


def _float(value: Any, where: str) -> Optional[float]:
    if value is None:
        return None
    if isinstance(value, bool) or not isinstance(value, (int, float)):
        raise SuiteFormatError(f"{where} 必须是数值: {value!r}")
    return float(value)


def _bool(value: Any, where: str) -> bool:
    if value is None:
        return False
    if not isinstance(value, bool):
        raise SuiteFormatError(f"{where} 必须是 true/false: {value!r}")
    return value


def _enum(enum_cls, value: Any, where: str, default=None):
    if value is None:
        return default
    try:
        return enum_cls(str(value).lower())
    except ValueError:
        choices = ', '.join(member.value for member in enum_cls)
        raise SuiteFormatError(f"{where} 取值无效: {value!r}（可选: {choices}）")


def _merge(defaults: Mapping[str, Any], entry: Mapping[str, Any]) -> Dict[str, Any]:
    """条件项覆盖 defaults，映射型小节按键合并"""
    merged = dict(defaults)
    for key, value in entry.items():
        if key in SECTION_KEYS and isinstance(value, dict) and isinstance(merged.get(key), dict):
            merged[key] = {**merged[key], **value}
        else:
            merged[key] = value
    return merged


# ==================== 解析 ====================

def _parse_condition(entry: Dict[str, Any], where: str) -> ConditionConfig:
    _check_keys(entry, CONDITION_KEYS, where)
    for section, allowed in SECTION_KEYS.items():
        if section in entry:
            _check_keys(entry[section], allowed, f"{where}.{section}")

    name = entry.get('name')
    if not isinstance(name, str) or not NAME_PATTERN.match(name):
        raise SuiteFormatError(f"{where}.name 必须是由字母、数字、'_'、'.'、'-' 组成的字符串: {name!r}")
    where = f"条件 '{name}'"

    if 'topology' not in entry:
        raise SuiteFormatError(f"{where} 缺少 topology")
    topo = entry['topology']
    kind = _enum(TopologyKind, topo.get('kind'), f"{where}.topology.kind")
    if kind is None:
        raise SuiteFormatError(f"{where}.topology 缺少 kind")
    topology = TopologySpec(
        kind=kind,
        n_facts=_int(topo.get('facts'), f"{where}.topology.facts"),
        n_rules=_int(topo.get('rules'), f"{where}.topology.rules"),
        density_pct=_int(topo.get('density'), f"{where}.topology.density"),
        depth=_int(topo.get('depth'), f"{where}.topology.depth"),
        interior_width=_int(topo.get('width'), f"{where}.topology.width"),
        boundary_width=_int(topo.get('boundary_width'), f"{where}.topology.boundary_width") or DEFAULT_BOUNDARY_WIDTH,
    )

    oracle_entry = entry.get('oracle') or {}
    _check_keys(oracle_entry, SECTION_KEYS['oracle'], f"{where}.oracle")
    if kind == TopologyKind.PERFECT:
        if oracle_entry:
            raise SuiteValidationError(f"{where}: perfect 拓扑的完美网络由 topology 决定，不能再设置 oracle")
        oracle = OracleSpec(kind=OracleKind.CLONE_OF_TRAINEE)
    else:
        oracle = OracleSpec(
            kind=OracleKind.RANDOM,
            n_facts=_int(oracle_entry.get('facts'), f"{where}.oracle.facts"),
            n_rules=_int(oracle_entry.get('rules'), f"{where}.oracle.rules"),
        )

    prune_entry = entry.get('prune') or {}
    _check_keys(prune_entry, SECTION_KEYS['prune'], f"{where}.prune")
    prune = PruneConfig(
        kind=_enum(PruneKind, prune_entry.get('kind'), f"{where}.prune.kind", PruneKind.NONE),
        threshold=_float(prune_entry.get('threshold'), f"{where}.prune.threshold"),
        scope=_enum(PruneScope, prune_entry.get('scope'), f"{where}.prune.scope", PruneScope.TARGET_FACT),
        prune_epoch=_int(prune_entry.get('epoch'), f"{where}.prune.epoch") or 0,
        active_filtering=_bool(prune_entry.get('filtering'), f"{where}.prune.filtering"),
    )

    training_entry = entry.get('training') or {}
    _check_keys(training_entry, SECTION_KEYS['training'], f"{where}.training")
    epochs = _int(training_entry.get('epochs'), f"{where}.training.epochs")
    velocity = _float(training_entry.get('velocity'), f"{where}.training.velocity")
    training = TrainingConfig(
        approach=_enum(TrainingApproach, training_entry.get('approach'), f"{where}.training.approach",
                       TrainingApproach.SAME_FACTS),
        epochs=100 if epochs is None else epochs,
        velocity=0.1 if velocity is None else velocity,
        prune=prune if prune.is_enabled() or prune.problems() else None,
    )

    iterations = _int(entry.get('iterations'), f"{where}.iterations")
    threshold = _float(entry.get('threshold'), f"{where}.threshold")
    condition = ConditionConfig(
        name=name,
        topology=topology,
        training=training,
        oracle=oracle,
        iterations=DEFAULT_ITERATIONS if iterations is None else iterations,
        master_seed=_int(entry.get('seed'), f"{where}.seed") or 0,
        classification_threshold=DEFAULT_CLASSIFICATION_THRESHOLD if threshold is None else threshold,
        copy_weights=_bool(entry.get('copy_weights'), f"{where}.copy_weights"),
        weight_noise=_float(entry.get('weight_noise'), f"{where}.weight_noise") or 0.0,
    )

    problems = condition.problems()
    if problems:
        raise SuiteValidationError(f"{where} 无效: {'; '.join(problems)}")
    return condition


def parse_suite(path: str) -> ExperimentSuite:
    """
    解析实验套件文件

    Args:
        path: 套件文件路径

    Returns:
        ExperimentSuite
    """
    if not os.path.isfile(path):
        raise SuiteNotFoundError(f"套件文件不存在: {path}")

    try:
        with open(path, 'r', encoding='utf-8') as f:
            document = yaml.safe_load(f)
    except yaml.YAMLError as e:
        raise SuiteFormatError(f"套件文件不是合法的 YAML: {path}: {e}")

    if document is None:
        raise SuiteFormatError(f"套件文件为空: {path}")
    _check_keys(document, TOP_KEYS, "套件顶层")

    name = document.get('suite')
    if not isinstance(name, str) or not NAME_PATTERN.match(name):
        raise SuiteFormatError(f"套件缺少合法的 suite 名称: {name!r}")

    defaults = document.get('defaults') or {}
    _check_keys(defaults, CONDITION_KEYS - {'name'}, "defaults")

    entries = document.get('conditions')
    if not isinstance(entries, list) or not entries:
        raise SuiteFormatError("conditions 必须是非空列表")

    conditions = []
    for position, entry in enumerate(entries):
        if not isinstance(entry, dict):
            raise SuiteFormatError(f"conditions[{position}] 必须是映射")
        conditions.append(_parse_condition(_merge(defaults, entry), f"conditions[{position}]"))

    names = [c.name for c in conditions]
    duplicates = sorted({n for n in names if names.count(n) > 1})
    if duplicates:
        raise SuiteValidationError(f"条件名称重复: {', '.join(duplicates)}")

    output_dir = document.get('output_dir') or name
    if not isinstance(output_dir, str):
        raise SuiteFormatError(f"output_dir 必须是字符串: {output_dir!r}")
    if not os.path.isabs(output_dir):
        output_dir = os.path.join(Config.DATA_DIR, output_dir)

    return ExperimentSuite(name=name, conditions=conditions, output_dir=output_dir, source_path=path)


class SuiteManager:
    """实验套件管理器"""

    def __init__(self, suites_dir: str = None):
        """
        初始化套件管理器

        Args:
            suites_dir: 套件文件目录，默认为 Config.SUITES_DIR
        """
        self.suites_dir = suites_dir or Config.SUITES_DIR
        self._cache = {}  # 缓存已解析的套件

    def resolve(self, name_or_path: str) -> str:
        """文件路径直接使用，否则在套件目录中查找"""
        if os.path.isfile(name_or_path):
            return name_or_path
        candidate = os.path.join(self.suites_dir, name_or_path)
        if not candidate.endswith(('.yaml', '.yml')) and not os.path.isfile(candidate):
            candidate += '.yaml'
        return candidate

    def load_suite(self, name_or_path: str) -> ExperimentSuite:
        """加载并缓存套件"""
        path = self.resolve(name_or_path)
        if path not in self._cache:
            self._cache[path] = parse_suite(path)
        return self._cache[path]

    def reload_suite(self, name_or_path: str) -> ExperimentSuite:
        """重新加载套件（忽略缓存）"""
        self._cache.pop(self.resolve(name_or_path), None)
        return self.load_suite(name_or_path)

    def clear_cache(self):
        """清空缓存"""
        self._cache.clear()

    def list_suites(self) -> list:
        """列出套件目录中的全部套件文件"""
        try:
            files = os.listdir(self.suites_dir)
            return sorted(f for f in files if f.endswith(('.yaml', '.yml')))
        except FileNotFoundError:
            return []

    def get_suite_info(self, filename: str) -> Dict[str, Any]:
        """获取套件文件信息"""
        path = os.path.join(self.suites_dir, filename)
        try:
            stat = os.stat(path)
        except FileNotFoundError:
            return {'filename': filename, 'size': 0, 'exists': False, 'conditions': 0, 'error': None}
        try:
            suite = self.load_suite(path)
            conditions, error = len(suite.conditions), None
        except (SuiteFormatError, SuiteValidationError) as e:
            conditions, error = 0, str(e)
        return {'filename': filename, 'size': stat.st_size, 'exists': True,
                'conditions': conditions, 'error': error}


# 创建全局实例
suite_manager = SuiteManager()
