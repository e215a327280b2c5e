#!/usr/bin/env python3
# -*- coding: utf-8 -*-
"""
训练模块
贡献规则识别、差异值计算、每轮权重更新以及单路径训练循环
"""

from __future__ import annotations

import logging
from dataclasses import dataclass, field, replace
from enum import Enum
from typing import TYPE_CHECKING, Dict, List, Mapping, Optional, Tuple

import numpy as np

from network import (
    RuleFactNetwork,
    RunStatus,
    canonical_assignment,
    evaluate,
    reachable,
    renormalize,
    restrict_assignment,
)

if TYPE_CHECKING:
    from pruning import PruneConfig, PruneReport

logger = logging.getLogger('rulefact')

# 规则ID → 该规则到目标事实的最大贡献
ContributionMap = Dict[int, float]


class TrainingError(RuntimeError):
    """训练无法进行（参数无效或路径不可达）"""


class EpochError(TrainingError):
    """某一轮中网络求值未收敛"""


class TrainingApproach(Enum):
    SAME_FACTS = 'same_facts'
    RANDOM_FACTS = 'random_facts'


@dataclass(frozen=True)
class TrainingConfig:
    approach: TrainingApproach = TrainingApproach.SAME_FACTS
    epochs: int = 100
    velocity: float = 0.1
    prune: Optional['PruneConfig'] = None

    def problems(self) -> List[str]:
        problems = []
        if self.epochs < 0:
            problems.append("epochs 不能为负")
        if not 0.0 < self.velocity <= 1.0:
            problems.append("velocity 必须在 (0,1] 内")
        if self.prune is not None:
            problems.extend(self.prune.problems(self.epochs))
        return problems


@dataclass(frozen=True)
class EpochRecord:
    epoch: int
    perfect_value: float
    trainee_value: float
    difference: float


@dataclass
class TrainingResult:
    """训练结果；被主动过滤丢弃时 network 为 None"""
    network: Optional[RuleFactNetwork]
    trace: List[EpochRecord] = field(default_factory=list)
    prune_report: Optional['PruneReport'] = None
    dropped: bool = False


# ==================== 贡献计算 ====================

def fact_reach(network: RuleFactNetwork, target: int) -> Dict[int, float]:
    """每个事实经规则链到达目标的最大权重乘积，目标自身为 1"""
    reach = {target: 1.0}
    rules = network.active_rules()
    changed = True
    while changed:
        changed = False
        for rule in rules:
            downstream = reach.get(rule.output)
            if downstream is None:
                continue
            for fact_id, weight in ((rule.input1, rule.w1), (rule.input2, rule.w2)):
                candidate = weight * downstream
                if candidate > reach.get(fact_id, 0.0):
                    reach[fact_id] = candidate
                    changed = True
    return reach


def contributing_rules(network: RuleFactNetwork, target: int) -> ContributionMap:
    """
    从目标事实反向闭包，计算每条规则的最大贡献

    直接输出到目标的规则贡献为其权重；间接规则的贡献为其权重乘以
    沿途规则的权重。按输入权重分别计算后取规则内最大值，多条路径只保留最大值。

    Args:
        network: 规则-事实网络
        target: 目标事实ID

    Returns:
        规则ID → 贡献值（没有规则到达目标时为空）
    """
    reach = fact_reach(network, target)
    contributions: ContributionMap = {}
    for rule in network.active_rules():
        downstream = reach.get(rule.output)
        if downstream is None:
            continue
        value = max(rule.w1, rule.w2) * downstream
        if value > 0.0:
            contributions[rule.id] = value
    return contributions


def difference_value(perfect_value: float, trainee_value: float) -> float:
    """归一化差异 |R_P − R_T| / max(R_P, R_T)，两者都为0时返回0"""
    top = max(perfect_value, trainee_value)
    if top <= 0.0:
        return 0.0
    return abs(perfect_value - trainee_value) / top


def rule_share(contribs: Mapping[int, float]) -> Dict[int, float]:
    """每条规则在全部贡献中的占比"""
    total = sum(contribs.values())
    if total <= 0.0:
        return {}
    return {rule_id: value / total for rule_id, value in contribs.items()}


def weight_delta(share: float, velocity: float, difference: float) -> float:
    return share * velocity * difference


# ==================== 单轮训练 ====================

def apply_epoch(perfect: RuleFactNetwork,
                trainee: RuleFactNetwork,
                assignment: Mapping[int, float],
                target: int,
                velocity: float,
                epoch: int = 0) -> EpochRecord:
    """
    运行一轮训练：两个网络求值，把差异按贡献占比分配到训练网络的规则权重

    训练网络输出偏低时，权重移向取值较大的输入；偏高时移向较小的输入；
    两个输入取值相同的规则不调整。

    Args:
        perfect: 完美网络（只读）
        trainee: 训练网络（原地更新权重）
        assignment: 事实赋值，超出某个网络事实范围的项对该网络忽略
        target: 目标事实ID
        velocity: 学习速度
        epoch: 轮次编号

    Returns:
        EpochRecord
    """
    perfect_run = evaluate(perfect, restrict_assignment(assignment, perfect), target)
    trainee_run = evaluate(trainee, restrict_assignment(assignment, trainee), target)
    if perfect_run.status == RunStatus.NON_CONVERGING:
        raise EpochError(f"第 {epoch} 轮完美网络求值未收敛")
    if trainee_run.status == RunStatus.NON_CONVERGING:
        raise EpochError(f"第 {epoch} 轮训练网络求值未收敛")

    perfect_value = perfect_run.target_value
    trainee_value = trainee_run.target_value
    difference = difference_value(perfect_value, trainee_value)

    if difference > 0.0:
        shares = rule_share(contributing_rules(trainee, target))
        underestimate = trainee_value < perfect_value
        values = trainee_run.fact_values
        index = {rule.id: i for i, rule in enumerate(trainee.rules)}
        for rule_id, share in shares.items():
            rule = trainee.rules[index[rule_id]]
            first, second = values[rule.input1], values[rule.input2]
            if first == second:
                continue
            delta = weight_delta(share, velocity, difference)
            if (first > second) == underestimate:
                moved = replace(rule, w1=rule.w1 + delta, w2=rule.w2 - delta)
            else:
                moved = replace(rule, w1=rule.w1 - delta, w2=rule.w2 + delta)
            trainee.rules[index[rule_id]] = renormalize(moved)

    return EpochRecord(epoch=epoch, perfect_value=perfect_value,
                       trainee_value=trainee_value, difference=difference)


def random_assignment(perfect: RuleFactNetwork,
                      trainee: RuleFactNetwork,
                      source: int,
                      rng: np.random.Generator) -> Dict[int, float]:
    """为两个网络的纯输入事实（以及源事实）抽取同一组 [0,1) 随机值"""
    inputs = sorted(set(perfect.pure_inputs()) | set(trainee.pure_inputs()) | {source})
    draws = rng.uniform(0.0, 1.0, size=len(inputs))
    return {fact_id: float(value) for fact_id, value in zip(inputs, draws)}


# ==================== 训练循环 ====================

def train(perfect: RuleFactNetwork,
          trainee: RuleFactNetwork,
          config: TrainingConfig,
          path: Tuple[int, int],
          rng: np.random.Generator) -> TrainingResult:
    """
    单路径训练循环

    same_facts 每轮使用标准赋值 {source: 0.99}；random_facts 每轮为纯输入事实
    重新抽取随机值。配置了剪枝时，在完成 prune_epoch 轮后剪枝，然后继续训练幸存网络。

    Args:
        perfect: 完美网络，权重不会改变
        trainee: 训练网络，不会被原地修改（在副本上训练）
        config: 训练配置
        path: (源事实, 目标事实)
        rng: 带种子的随机数生成器

    Returns:
        TrainingResult
    """
    problems = config.problems()
    if problems:
        raise TrainingError(f"训练配置无效: {'; '.join(problems)}")

    source, target = path
    for name, network in (('完美网络', perfect), ('训练网络', trainee)):
        if not reachable(network, source, target):
            raise TrainingError(f"{name}中事实 {source} 无法到达事实 {target}")

    network = trainee.copy()
    result = TrainingResult(network=network)
    prune = config.prune

    for epoch in range(config.epochs):
        if prune is not None and prune.is_enabled() and epoch == prune.prune_epoch:
            network, result.prune_report, result.dropped = _prune_step(perfect, network, config, path, rng)
            if result.dropped:
                logger.debug(f"第 {epoch} 轮剪枝后网络被主动过滤丢弃")
                result.network = None
                return result
            result.network = network

        if config.approach == TrainingApproach.SAME_FACTS:
            assignment = canonical_assignment(source)
        else:
            assignment = random_assignment(perfect, network, source, rng)
        record = apply_epoch(perfect, network, assignment, target, config.velocity, epoch)
        result.trace.append(record)
        logger.debug(f"epoch {epoch}: R_P={record.perfect_value:.6f} R_T={record.trainee_value:.6f} "
                     f"DV={record.difference:.6f}")

    return result


def _prune_step(perfect: RuleFactNetwork,
                network: RuleFactNetwork,
                config: TrainingConfig,
                path: Tuple[int, int],
                rng: np.random.Generator):
    """执行一次剪枝，返回 (网络, 剪枝报告, 是否丢弃)"""
    from pruning import FilterVerdict, PruneKind, adaptive_prune, apply_active_filter, contribution_prune

    source, target = path
    prune = config.prune
    if prune.kind == PruneKind.CONTRIBUTION:
        pruned, report = contribution_prune(network, prune, target)
        return pruned, report, False

    if config.approach == TrainingApproach.SAME_FACTS:
        assignment = canonical_assignment(source)
    else:
        assignment = random_assignment(perfect, network, source, rng)
    pruned, report = adaptive_prune(network, perfect, assignment, source, target)
    outcome = apply_active_filter(network, pruned, report, prune.active_filtering)
    if outcome.verdict == FilterVerdict.DROPPED:
        return None, outcome.report, True
    return outcome.network, outcome.report, False
