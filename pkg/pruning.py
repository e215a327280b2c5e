#!/usr/bin/env python3
# -*- coding: utf-8 -*-
"""
剪枝模块
基于贡献阈值的剪枝、自适应（挂起-测试-删除）剪枝以及主动过滤
"""

from __future__ import annotations

import logging
from dataclasses import dataclass, replace
from enum import Enum
from typing import Dict, List, Mapping, Optional, Tuple

from network import RuleFactNetwork, RunStatus, evaluate, restrict_assignment
from trainer import contributing_rules, difference_value

logger = logging.getLogger('rulefact')


class PruneError(RuntimeError):
    """剪枝过程中网络求值失败"""


class PruneKind(Enum):
    NONE = 'none'
    CONTRIBUTION = 'contribution'
    ADAPTIVE = 'adaptive'


class PruneScope(Enum):
    ANY_FACT = 'any_fact'
    TARGET_FACT = 'target_fact'


class FilterVerdict(Enum):
    KEPT = 'kept'
    DROPPED = 'dropped'
    REVERTED = 'reverted_to_pre_prune'


@dataclass(frozen=True)
class PruneConfig:
    kind: PruneKind = PruneKind.NONE
    threshold: Optional[float] = None
    scope: PruneScope = PruneScope.TARGET_FACT
    prune_epoch: int = 0
    active_filtering: bool = False

    def is_enabled(self) -> bool:
        return self.kind != PruneKind.NONE

    def problems(self, epochs: Optional[int] = None) -> List[str]:
        problems = []
        if self.kind == PruneKind.CONTRIBUTION:
            if self.threshold is None or not 0.0 <= self.threshold <= 1.0:
                problems.append("贡献剪枝需要 [0,1] 内的 threshold")
        elif self.threshold is not None:
            problems.append("只有贡献剪枝可以设置 threshold")
        if self.active_filtering and self.kind != PruneKind.ADAPTIVE:
            problems.append("主动过滤只能与自适应剪枝一起使用")
        if self.is_enabled():
            if self.prune_epoch < 0:
                problems.append("prune epoch 不能为负")
            elif epochs is not None and self.prune_epoch >= epochs:
                problems.append(f"prune epoch ({self.prune_epoch}) 必须小于训练轮数 ({epochs})")
        return problems


@dataclass(frozen=True)
class PruneReport:
    kind: PruneKind
    tested: int
    removed: int
    reinstated: int
    baseline_error: Optional[float] = None
    final_error: Optional[float] = None
    verdict: FilterVerdict = FilterVerdict.KEPT
    removed_rules: Tuple[int, ...] = ()
    dangling_facts: Tuple[int, ...] = ()


@dataclass(frozen=True)
class FilterOutcome:
    verdict: FilterVerdict
    network: Optional[RuleFactNetwork]
    report: PruneReport


# ==================== 贡献剪枝 ====================

def _best_contributions(network: RuleFactNetwork, config: PruneConfig, target: int) -> Dict[int, float]:
    if config.scope == PruneScope.TARGET_FACT:
        return contributing_rules(network, target)
    best: Dict[int, float] = {}
    for fact in network.facts:
        for rule_id, value in contributing_rules(network, fact.id).items():
            if value > best.get(rule_id, 0.0):
                best[rule_id] = value
    return best


def contribution_prune(network: RuleFactNetwork,
                       config: PruneConfig,
                       target: int) -> Tuple[RuleFactNetwork, PruneReport]:
    """
    删除没有贡献或贡献低于阈值的规则

    scope=target_fact 时比较规则到目标事实的最大贡献；
    scope=any_fact 时只要规则对任一事实的最大贡献达到阈值就保留。
    失去全部关联规则的事实保留，但记录在报告中。
    """
    if config.kind != PruneKind.CONTRIBUTION:
        raise PruneError(f"贡献剪枝收到了 {config.kind.value} 配置")

    best = _best_contributions(network, config, target)
    active = network.active_rules()
    doomed = [
        rule.id for rule in active
        if best.get(rule.id, 0.0) <= 0.0 or best[rule.id] < config.threshold
    ]
    pruned = network.copy()
    pruned.remove_rules(doomed)
    dangling = pruned.dangling_facts()
    logger.debug(f"贡献剪枝: 测试 {len(active)} 条规则，删除 {len(doomed)} 条，悬空事实 {dangling}")

    report = PruneReport(
        kind=PruneKind.CONTRIBUTION,
        tested=len(active),
        removed=len(doomed),
        reinstated=0,
        removed_rules=tuple(doomed),
        dangling_facts=tuple(dangling),
    )
    return pruned, report


# ==================== 自适应剪枝 ====================

def _target_value(network: RuleFactNetwork, assignment: Mapping[int, float], target: int, what: str) -> float:
    outcome = evaluate(network, restrict_assignment(assignment, network), target)
    if outcome.status == RunStatus.NON_CONVERGING:
        raise PruneError(f"{what}求值未收敛")
    return outcome.target_value


def adaptive_prune(trainee: RuleFactNetwork,
                   perfect: RuleFactNetwork,
                   assignment: Mapping[int, float],
                   source: int,
                   target: int) -> Tuple[RuleFactNetwork, PruneReport]:
    """
    按规则ID升序逐条挂起规则并重新求值

    误差变大则恢复该规则；误差不变或变小则永久删除，并以新误差作为基线。
    扫描中求值未收敛时放弃本次剪枝并抛出 PruneError（输入网络不被修改）。

    Args:
        trainee: 训练网络
        perfect: 完美网络
        assignment: 训练路径上的事实赋值
        source: 源事实ID
        target: 目标事实ID

    Returns:
        (剪枝后的网络, 剪枝报告)
    """
    perfect_value = _target_value(perfect, assignment, target, "完美网络")
    baseline = difference_value(perfect_value, _target_value(trainee, assignment, target, "训练网络"))

    working = trainee.copy()
    index = {rule.id: i for i, rule in enumerate(working.rules)}
    candidates = [rule.id for rule in working.active_rules()]
    error = baseline
    removed: List[int] = []
    reinstated = 0

    for rule_id in candidates:
        rule = working.rules[index[rule_id]]
        rule.suspended = True
        trial = difference_value(
            perfect_value,
            _target_value(working, assignment, target, f"挂起规则 {rule_id} 后的训练网络"),
        )
        if trial > error:
            rule.suspended = False
            reinstated += 1
        else:
            removed.append(rule_id)
            error = trial

    working.remove_rules(removed)
    logger.debug(f"自适应剪枝 {source}->{target}: 测试 {len(candidates)} 条，删除 {len(removed)} 条，"
                 f"误差 {baseline:.6f} -> {error:.6f}")

    report = PruneReport(
        kind=PruneKind.ADAPTIVE,
        tested=len(candidates),
        removed=len(removed),
        reinstated=reinstated,
        baseline_error=baseline,
        final_error=error,
        removed_rules=tuple(removed),
        dangling_facts=tuple(working.dangling_facts()),
    )
    return working, report


def apply_active_filter(pre_prune_snapshot: RuleFactNetwork,
                        pruned: RuleFactNetwork,
                        report: PruneReport,
                        active_filtering: bool) -> FilterOutcome:
    """
    主动过滤：剪枝后没有规则幸存时，开启过滤则丢弃网络，否则退回剪枝前的网络
    """
    if pruned.active_rules():
        verdict, network = FilterVerdict.KEPT, pruned
    elif active_filtering:
        verdict, network = FilterVerdict.DROPPED, None
    else:
        verdict, network = FilterVerdict.REVERTED, pre_prune_snapshot
    return FilterOutcome(verdict=verdict, network=network, report=replace(report, verdict=verdict))
