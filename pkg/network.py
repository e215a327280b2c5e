#!/usr/bin/env python3
# -*- coding: utf-8 -*-
"""
规则-事实网络核心模块
负责网络表示、结构校验以及前向链式不动点求值
"""

from __future__ import annotations

import logging
from copy import deepcopy
from dataclasses import dataclass, field, replace
from enum import Enum
from typing import Any, Dict, FrozenSet, Iterable, List, Mapping, Optional, Tuple

import networkx as nx

logger = logging.getLogger('rulefact')

# 求值默认参数
DEFAULT_FACT_VALUE = 0.0
DEFAULT_CHANGE_EPSILON = 1e-9
PASS_CAP_FACTOR = 100
SOURCE_VALUE = 0.99
WEIGHT_TOLERANCE = 1e-9


class NetworkInputError(ValueError):
    """求值输入错误：未知的事实ID或越界取值"""


@dataclass
class Fact:
    """事实节点，取值位于 [0,1]"""
    id: int
    value: float = DEFAULT_FACT_VALUE
    label: Optional[str] = None
    layer: Optional[int] = None

    def to_dict(self) -> Dict[str, Any]:
        """转换为字典格式"""
        data = {'id': self.id, 'value': self.value, 'label': self.label}
        if self.layer is not None:
            data['layer'] = self.layer
        return data

    @classmethod
    def from_dict(cls, data: Mapping[str, Any]) -> 'Fact':
        """从字典创建实例"""
        return cls(
            id=int(data['id']),
            value=float(data.get('value', DEFAULT_FACT_VALUE)),
            label=data.get('label') or None,
            layer=int(data['layer']) if data.get('layer') is not None else None,
        )


@dataclass
class Rule:
    """双输入加权规则：output = w1·input1 + w2·input2"""
    id: int
    input1: int
    input2: int
    output: int
    w1: float = 0.5
    w2: float = 0.5
    suspended: bool = False
    label: Optional[str] = None

    @property
    def inputs(self) -> Tuple[int, int]:
        return (self.input1, self.input2)

    def key(self) -> Tuple[FrozenSet[int], int]:
        """去重键：无序输入对 + 输出"""
        return (frozenset((self.input1, self.input2)), self.output)

    def weight_on(self, fact_id: int) -> float:
        """返回规则作用在指定输入事实上的权重"""
        if fact_id == self.input1:
            return self.w1
        if fact_id == self.input2:
            return self.w2
        return 0.0

    def to_dict(self) -> Dict[str, Any]:
        """转换为字典格式"""
        return {
            'id': self.id,
            'in1': self.input1,
            'in2': self.input2,
            'out': self.output,
            'w1': self.w1,
            'w2': self.w2,
            'suspended': self.suspended,
            'label': self.label,
        }

    @classmethod
    def from_dict(cls, data: Mapping[str, Any]) -> 'Rule':
        """从字典创建实例"""
        return cls(
            id=int(data['id']),
            input1=int(data['in1']),
            input2=int(data['in2']),
            output=int(data['out']),
            w1=float(data['w1']),
            w2=float(data['w2']),
            suspended=bool(data.get('suspended', False)),
            label=data.get('label') or None,
        )


@dataclass
class RuleFactNetwork:
    """规则-事实网络：被训练、剪枝和评估的对象"""
    facts: List[Fact] = field(default_factory=list)
    rules: List[Rule] = field(default_factory=list)

    def copy(self) -> 'RuleFactNetwork':
        return deepcopy(self)

    def active_rules(self) -> List[Rule]:
        """未挂起的规则，按规则ID升序"""
        return sorted((r for r in self.rules if not r.suspended), key=lambda r: r.id)

    def rule_index(self, rule_id: int) -> int:
        for index, rule in enumerate(self.rules):
            if rule.id == rule_id:
                return index
        raise KeyError(f"规则不存在: {rule_id}")

    def get_rule(self, rule_id: int) -> Rule:
        return self.rules[self.rule_index(rule_id)]

    def remove_rules(self, rule_ids: Iterable[int]):
        doomed = set(rule_ids)
        self.rules = [r for r in self.rules if r.id not in doomed]

    def pure_inputs(self) -> List[int]:
        """不是任何活动规则输出的事实"""
        outputs = {r.output for r in self.rules if not r.suspended}
        return [f.id for f in self.facts if f.id not in outputs]

    def dangling_facts(self) -> List[int]:
        """没有任何关联规则的事实"""
        used = set()
        for rule in self.rules:
            used.update((rule.input1, rule.input2, rule.output))
        return [f.id for f in self.facts if f.id not in used]

    def layer_members(self, layer: int) -> List[int]:
        return [f.id for f in self.facts if f.layer == layer]

    def is_layered(self) -> bool:
        return bool(self.facts) and all(f.layer is not None for f in self.facts)

    def to_dict(self) -> Dict[str, Any]:
        """转换为字典格式"""
        return {
            'facts': [f.to_dict() for f in self.facts],
            'rules': [r.to_dict() for r in self.rules],
        }

    @classmethod
    def from_dict(cls, data: Mapping[str, Any]) -> 'RuleFactNetwork':
        """从字典创建实例"""
        return cls(
            facts=[Fact.from_dict(f) for f in data.get('facts', [])],
            rules=[Rule.from_dict(r) for r in data.get('rules', [])],
        )


class RunStatus(Enum):
    COMPLETED = 'completed'
    IMMEDIATE_COMPLETION = 'immediate_completion'
    NON_CONVERGING = 'non_converging'


@dataclass(frozen=True)
class RunOutcome:
    """一次求值的结果；target_value 即完美网络或训练网络的输出"""
    status: RunStatus
    target_value: float
    passes: int
    fact_values: Tuple[float, ...] = ()


# ==================== 结构校验 ====================

WEIGHT_SUM = 'weight_sum'
WEIGHT_RANGE = 'weight_range'
DUPLICATE_RULE = 'duplicate_rule'
DUPLICATE_RULE_ID = 'duplicate_rule_id'
DANGLING_ID = 'dangling_id'
SELF_LOOP = 'self_loop'
SAME_INPUTS = 'same_inputs'
FACT_VALUE = 'fact_value'
FACT_IDS = 'fact_ids'


@dataclass(frozen=True)
class Violation:
    kind: str
    subject: str
    message: str


@dataclass
class ValidationReport:
    """校验报告；违规项为空即网络合法"""
    violations: List[Violation] = field(default_factory=list)

    @property
    def is_valid(self) -> bool:
        return not self.violations

    def kinds(self) -> set:
        return {v.kind for v in self.violations}

    def add(self, kind: str, subject: str, message: str):
        self.violations.append(Violation(kind, subject, message))

    def summary(self) -> str:
        return '; '.join(v.message for v in self.violations)


def validate(network: RuleFactNetwork) -> ValidationReport:
    """
    检查网络的全部不变量

    Args:
        network: 待检查的网络

    Returns:
        列出所有违规项的报告（违规是数据而不是异常）
    """
    report = ValidationReport()

    fact_ids = [f.id for f in network.facts]
    if fact_ids != list(range(len(fact_ids))):
        report.add(FACT_IDS, 'facts', "事实ID必须从0开始连续且唯一")
    for fact in network.facts:
        if not 0.0 <= fact.value <= 1.0:
            report.add(FACT_VALUE, f'fact {fact.id}', f"事实 {fact.id} 的取值 {fact.value} 不在 [0,1] 内")

    known = set(fact_ids)
    seen_ids = set()
    seen_keys: Dict[Tuple[FrozenSet[int], int], int] = {}
    for rule in network.rules:
        subject = f'rule {rule.id}'
        if rule.id in seen_ids:
            report.add(DUPLICATE_RULE_ID, subject, f"规则ID {rule.id} 重复")
        seen_ids.add(rule.id)

        dangling = [x for x in (rule.input1, rule.input2, rule.output) if x not in known]
        if dangling:
            report.add(DANGLING_ID, subject, f"规则 {rule.id} 引用了不存在的事实 {dangling}")
        if rule.input1 == rule.input2:
            report.add(SAME_INPUTS, subject, f"规则 {rule.id} 的两个输入相同")
        if rule.output in (rule.input1, rule.input2):
            report.add(SELF_LOOP, subject, f"规则 {rule.id} 的输出也是它的输入")
        if not (0.0 <= rule.w1 <= 1.0 and 0.0 <= rule.w2 <= 1.0):
            report.add(WEIGHT_RANGE, subject, f"规则 {rule.id} 的权重不在 [0,1] 内")
        if abs(rule.w1 + rule.w2 - 1.0) > WEIGHT_TOLERANCE:
            report.add(WEIGHT_SUM, subject, f"规则 {rule.id} 的权重和 ≠ 1 ({rule.w1 + rule.w2})")

        key = rule.key()
        if key in seen_keys:
            report.add(DUPLICATE_RULE, subject, f"规则 {rule.id} 与规则 {seen_keys[key]} 重复")
        else:
            seen_keys[key] = rule.id

    return report


# ==================== 求值 ====================

def canonical_assignment(source: int) -> Dict[int, float]:
    """标准赋值：源事实 0.99，其余取默认值"""
    return {source: SOURCE_VALUE}


def restrict_assignment(assignment: Mapping[int, float], network: RuleFactNetwork) -> Dict[int, float]:
    """丢弃超出网络事实范围的赋值项（两个网络事实数不同时共用一组赋值）"""
    n_facts = len(network.facts)
    return {fact_id: value for fact_id, value in assignment.items() if 0 <= fact_id < n_facts}


def evaluate(network: RuleFactNetwork,
             assignment: Mapping[int, float],
             target: int,
             change_epsilon: float = DEFAULT_CHANGE_EPSILON,
             pass_cap: Optional[int] = None) -> RunOutcome:
    """
    前向链式求值直到不动点

    每一轮按规则ID升序无条件触发全部未挂起规则，候选值立即写入输出事实，
    因此同一事实的多条规则中ID最大的一条决定该轮结束时的取值。
    赋值只给出初始值：被赋值的事实若是某条规则的输出，同样会被覆盖。
    一轮结束时若没有事实相对本轮开始时变化超过 change_epsilon 则终止。

    Args:
        network: 规则-事实网络
        assignment: 事实ID到初始取值的映射
        target: 目标事实ID
        change_epsilon: 变化判定阈值
        pass_cap: 最大轮数，默认 100 × 规则数

    Returns:
        RunOutcome
    """
    n_facts = len(network.facts)
    if not 0 <= target < n_facts:
        raise NetworkInputError(f"未知的目标事实: {target}")

    values = [DEFAULT_FACT_VALUE] * n_facts
    for fact_id, value in assignment.items():
        if not 0 <= fact_id < n_facts:
            raise NetworkInputError(f"赋值中存在未知事实: {fact_id}")
        if not 0.0 <= value <= 1.0:
            raise NetworkInputError(f"事实 {fact_id} 的赋值 {value} 不在 [0,1] 内")
        values[fact_id] = float(value)

    cap = pass_cap if pass_cap is not None else max(1, PASS_CAP_FACTOR * len(network.rules))
    if cap < 1:
        raise NetworkInputError(f"pass_cap 必须为正数: {cap}")

    program = [(r.input1, r.input2, r.output, r.w1, r.w2) for r in network.active_rules()]

    passes = 0
    while True:
        passes += 1
        before = list(values)
        for in1, in2, out, w1, w2 in program:
            # 凸组合，只需吸收浮点误差
            values[out] = min(1.0, max(0.0, w1 * values[in1] + w2 * values[in2]))

        changed = any(abs(now - then) > change_epsilon for now, then in zip(values, before))
        if not changed:
            status = RunStatus.IMMEDIATE_COMPLETION if passes == 1 else RunStatus.COMPLETED
            break
        if passes >= cap:
            status = RunStatus.NON_CONVERGING
            logger.debug(f"求值未收敛: {passes} 轮后仍有事实变化")
            break

    return RunOutcome(status=status, target_value=values[target], passes=passes, fact_values=tuple(values))


# ==================== 连通性 ====================

def to_digraph(network: RuleFactNetwork) -> nx.DiGraph:
    """事实级有向图：每条活动规则贡献 input→output 两条边"""
    graph = nx.DiGraph()
    graph.add_nodes_from(f.id for f in network.facts)
    for rule in network.active_rules():
        graph.add_edge(rule.input1, rule.output)
        graph.add_edge(rule.input2, rule.output)
    return graph


def reachable(network: RuleFactNetwork, source: int, target: int) -> bool:
    """源事实是否通过规则链（直接或传递地）影响目标事实"""
    graph = to_digraph(network)
    for fact_id in (source, target):
        if fact_id not in graph:
            raise NetworkInputError(f"未知事实: {fact_id}")
    if source == target:
        return any(nx.has_path(graph, nxt, target) for nxt in graph.successors(source))
    return nx.has_path(graph, source, target)


# ==================== 权重归一化 ====================

def renormalize(rule: Rule) -> Rule:
    """权重截断到 [0,1] 后缩放使 w1 + w2 = 1；全为0时重置为 0.5/0.5"""
    w1 = min(1.0, max(0.0, rule.w1))
    w2 = min(1.0, max(0.0, rule.w2))
    total = w1 + w2
    if total <= 0.0:
        return replace(rule, w1=0.5, w2=0.5)
    return replace(rule, w1=w1 / total, w2=w2 / total)
