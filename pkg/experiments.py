#!/usr/bin/env python3
# -*- coding: utf-8 -*-
"""
实验模块
蒙特卡洛实验流程：每次迭代生成网络、训练、评估并应用排除规则，
再把一个实验条件的全部迭代汇总成统计表
"""

from __future__ import annotations

import logging
from dataclasses import dataclass, field
from enum import Enum
from typing import Any, Dict, List, Optional, Sequence, Tuple

import numpy as np
from joblib import Parallel, delayed

from generators import (
    TopologyKind,
    TopologySpec,
    build_network,
    clone_structure_fresh_weights,
    gen_random,
    perturb_weights,
    rule_capacity,
)
from network import RuleFactNetwork, RunStatus, canonical_assignment, evaluate, reachable
from pruning import PruneError, PruneKind
from trainer import EpochError, TrainingConfig, TrainingError, difference_value, train

logger = logging.getLogger('rulefact')

DEFAULT_ITERATIONS = 1000
DEFAULT_CLASSIFICATION_THRESHOLD = 0.10


class OracleKind(Enum):
    RANDOM = 'random'
    CLONE_OF_TRAINEE = 'clone_of_trainee'


class RecordStatus(Enum):
    COMPLETED = 'completed'
    EXCLUDED_NO_PATH = 'excluded_no_path'
    EXCLUDED_IMMEDIATE = 'excluded_immediate'
    EXCLUDED_NON_CONVERGING = 'excluded_non_converging'
    EXCLUDED_ZERO_ORACLE = 'excluded_zero_oracle'
    DROPPED = 'dropped'


@dataclass(frozen=True)
class OracleSpec:
    """完美网络参数；n_facts 缺省时使用训练网络的事实数"""
    kind: OracleKind = OracleKind.RANDOM
    n_facts: Optional[int] = None
    n_rules: Optional[int] = None


@dataclass(frozen=True)
class ConditionConfig:
    """一个实验条件"""
    name: str
    topology: TopologySpec
    training: TrainingConfig
    oracle: OracleSpec = OracleSpec()
    iterations: int = DEFAULT_ITERATIONS
    master_seed: int = 0
    classification_threshold: float = DEFAULT_CLASSIFICATION_THRESHOLD
    copy_weights: bool = False
    weight_noise: float = 0.0

    def oracle_facts(self) -> int:
        if self.oracle.kind == OracleKind.CLONE_OF_TRAINEE:
            return self.topology.fact_count()
        return self.oracle.n_facts if self.oracle.n_facts is not None else self.topology.fact_count()

    def problems(self) -> List[str]:
        """返回配置问题列表，空列表表示合法"""
        problems = list(self.topology.problems())
        problems.extend(self.training.problems())
        if self.iterations < 1:
            problems.append("iterations 必须 ≥ 1")
        if self.master_seed < 0:
            problems.append("seed 不能为负")
        if not 0.0 < self.classification_threshold < 1.0:
            problems.append("threshold 必须在 (0,1) 内")
        if self.weight_noise < 0.0:
            problems.append("weight_noise 不能为负")

        if self.topology.kind == TopologyKind.PERFECT and self.oracle.kind != OracleKind.CLONE_OF_TRAINEE:
            problems.append("perfect 拓扑的训练网络必须复制完美网络结构 (clone_of_trainee)")
        if self.oracle.kind == OracleKind.CLONE_OF_TRAINEE:
            if self.topology.kind not in (TopologyKind.PERFECT, TopologyKind.RANDOM):
                problems.append("完美网络结构复制只适用于 perfect/random 拓扑")
        else:
            if self.copy_weights or self.weight_noise > 0.0:
                problems.append("copy_weights/weight_noise 只适用于 perfect 拓扑")
            if self.oracle.n_rules is None or self.oracle.n_rules < 1:
                problems.append("oracle rules 必须 ≥ 1")
            if self.oracle.n_facts is not None and self.oracle.n_facts < 3:
                problems.append("oracle facts 必须 ≥ 3")
            oracle_facts = self.oracle.n_facts
            if oracle_facts is None and not self.topology.problems():
                oracle_facts = self.topology.fact_count()
            if self.oracle.n_rules is not None and (oracle_facts or 0) >= 3:
                capacity = rule_capacity(oracle_facts)
                if self.oracle.n_rules > capacity:
                    problems.append(f"oracle rules 超过 {oracle_facts} 个事实的不重复规则上限 {capacity}")
            if (self.topology.kind == TopologyKind.LAYERED and not self.topology.problems()
                    and self.oracle_facts() < self.topology.fact_count()):
                problems.append("分层条件的 oracle facts 不能少于分层网络的事实数")
        return problems

    def to_dict(self) -> Dict[str, Any]:
        """转换为与套件文件键一致的字典格式"""
        topology = self.topology
        data: Dict[str, Any] = {
            'name': self.name,
            'topology': {
                'kind': topology.kind.value,
                'facts': topology.n_facts,
                'rules': topology.n_rules,
                'density': topology.density_pct,
                'depth': topology.depth,
                'width': topology.interior_width,
                'boundary_width': topology.boundary_width,
            },
            'training': {
                'approach': self.training.approach.value,
                'epochs': self.training.epochs,
                'velocity': self.training.velocity,
            },
            'iterations': self.iterations,
            'seed': self.master_seed,
            'threshold': self.classification_threshold,
            'copy_weights': self.copy_weights,
            'weight_noise': self.weight_noise,
        }
        if topology.kind != TopologyKind.LAYERED:
            for key in ('depth', 'width', 'boundary_width'):
                data['topology'].pop(key)
        if self.oracle.kind == OracleKind.RANDOM:
            data['oracle'] = {'facts': self.oracle_facts(), 'rules': self.oracle.n_rules}
        prune = self.training.prune
        if prune is not None and prune.kind != PruneKind.NONE:
            data['prune'] = {
                'kind': prune.kind.value,
                'epoch': prune.prune_epoch,
                'threshold': prune.threshold,
                'scope': prune.scope.value,
                'filtering': prune.active_filtering,
            }
        return data


@dataclass(frozen=True)
class RunRecord:
    seed: int
    status: RecordStatus
    error: Optional[float] = None
    rules_after_prune: int = 0
    source: Optional[int] = None
    target: Optional[int] = None
    initial_error: Optional[float] = None


@dataclass(frozen=True)
class ConditionStats:
    mean: Optional[float]
    median: Optional[float]
    av_high: Optional[float]
    av_low: Optional[float]
    ct_high: int
    ct_low: int
    completions: int
    exclusions: Dict[str, int] = field(default_factory=dict)
    iterations: int = 0


@dataclass
class ConditionResult:
    config: ConditionConfig
    stats: ConditionStats
    records: List[RunRecord]


# ==================== 单次迭代 ====================

def derive_seed(master_seed: int, index: int) -> int:
    """由 (主种子, 迭代序号) 派生迭代种子，与执行顺序无关"""
    state = np.random.SeedSequence([master_seed, index]).generate_state(1, dtype=np.uint32)
    return int(state[0])


def build_pair(config: ConditionConfig, rng: np.random.Generator) -> Tuple[RuleFactNetwork, RuleFactNetwork]:
    """生成 (完美网络, 训练网络)"""
    topology = config.topology
    if config.oracle.kind == OracleKind.CLONE_OF_TRAINEE:
        perfect = gen_random(topology.n_facts, topology.n_rules, rng)
        if config.copy_weights:
            trainee = perfect.copy()
        else:
            trainee = clone_structure_fresh_weights(perfect, rng)
        if config.weight_noise > 0.0:
            trainee = perturb_weights(trainee, config.weight_noise, rng)
        return perfect, trainee

    perfect = gen_random(config.oracle_facts(), config.oracle.n_rules, rng)
    trainee = build_network(topology, rng)
    return perfect, trainee


def pick_path(perfect: RuleFactNetwork, trainee: RuleFactNetwork,
              rng: np.random.Generator) -> Optional[Tuple[int, int]]:
    """
    选取源事实和目标事实

    分层网络从第一层中完美网络没有规则写入的事实里选源、最后一层选目标，
    没有候选源时返回 None；其余网络在两个网络共有的事实中均匀选取，相同则重抽。
    """
    if trainee.is_layered():
        oracle_inputs = set(perfect.pure_inputs())
        sources = [f for f in trainee.layer_members(0) if f in oracle_inputs]
        if not sources:
            return None
        last = max(f.layer for f in trainee.facts)
        targets = trainee.layer_members(last)
        return int(sources[rng.integers(len(sources))]), int(targets[rng.integers(len(targets))])

    common = min(len(perfect.facts), len(trainee.facts))
    source = int(rng.integers(common))
    target = int(rng.integers(common))
    while target == source:
        target = int(rng.integers(common))
    return source, target


def run_iteration(config: ConditionConfig, iteration_seed: int) -> RunRecord:
    """
    执行一次实验迭代

    Args:
        config: 实验条件
        iteration_seed: 迭代种子

    Returns:
        RunRecord（求值异常一律映射为排除状态，不会抛出）
    """
    rng = np.random.default_rng(iteration_seed)
    perfect, trainee = build_pair(config, rng)
    path = pick_path(perfect, trainee, rng)
    if path is None:
        return RunRecord(seed=iteration_seed, status=RecordStatus.EXCLUDED_NO_PATH,
                         rules_after_prune=len(trainee.active_rules()))
    source, target = path

    def record(status: RecordStatus, **extra) -> RunRecord:
        extra.setdefault('rules_after_prune', len(trainee.active_rules()))
        return RunRecord(seed=iteration_seed, status=status, source=source, target=target, **extra)

    if not (reachable(perfect, source, target) and reachable(trainee, source, target)):
        return record(RecordStatus.EXCLUDED_NO_PATH)

    canonical = canonical_assignment(source)
    perfect_run = evaluate(perfect, canonical, target)
    trainee_run = evaluate(trainee, canonical, target)
    statuses = (perfect_run.status, trainee_run.status)
    if RunStatus.NON_CONVERGING in statuses:
        return record(RecordStatus.EXCLUDED_NON_CONVERGING)
    if RunStatus.IMMEDIATE_COMPLETION in statuses:
        return record(RecordStatus.EXCLUDED_IMMEDIATE)
    if perfect_run.target_value <= 0.0:
        return record(RecordStatus.EXCLUDED_ZERO_ORACLE)
    initial_error = difference_value(perfect_run.target_value, trainee_run.target_value)

    try:
        result = train(perfect, trainee, config.training, (source, target), rng)
    except (EpochError, PruneError) as e:
        logger.debug(f"迭代 {iteration_seed} 训练中求值失败: {e}")
        return record(RecordStatus.EXCLUDED_NON_CONVERGING, initial_error=initial_error)
    except TrainingError as e:
        logger.debug(f"迭代 {iteration_seed} 无法训练: {e}")
        return record(RecordStatus.EXCLUDED_NO_PATH, initial_error=initial_error)

    if result.dropped:
        return record(RecordStatus.DROPPED, rules_after_prune=0, initial_error=initial_error)

    final_run = evaluate(result.network, canonical, target)
    if final_run.status == RunStatus.NON_CONVERGING:
        return record(RecordStatus.EXCLUDED_NON_CONVERGING, initial_error=initial_error)

    return record(
        RecordStatus.COMPLETED,
        error=difference_value(perfect_run.target_value, final_run.target_value),
        rules_after_prune=len(result.network.active_rules()),
        initial_error=initial_error,
    )


# ==================== 汇总 ====================

def classify_and_aggregate(records: Sequence[RunRecord], threshold: float) -> ConditionStats:
    """
    按误差阈值把完成的迭代分为高误差和低误差两组并计算统计量

    均值和中位数只在完成的迭代上计算；空分组的平均值为 None（不是0）。
    """
    errors = np.array([r.error for r in records if r.status == RecordStatus.COMPLETED], dtype=float)
    low = errors[errors <= threshold]
    high = errors[errors > threshold]

    def average(values: np.ndarray) -> Optional[float]:
        return float(np.mean(values)) if values.size else None

    exclusions = {status.value: 0 for status in RecordStatus if status != RecordStatus.COMPLETED}
    for r in records:
        if r.status != RecordStatus.COMPLETED:
            exclusions[r.status.value] += 1

    return ConditionStats(
        mean=average(errors),
        median=float(np.median(errors)) if errors.size else None,
        av_high=average(high),
        av_low=average(low),
        ct_high=int(high.size),
        ct_low=int(low.size),
        completions=int(errors.size),
        exclusions=exclusions,
        iterations=len(records),
    )


def run_condition(config: ConditionConfig, n_jobs: int = 1, backend: str = 'loky') -> ConditionResult:
    """
    执行一个实验条件的全部迭代

    迭代种子预先由 (master_seed, 序号) 派生，结果按序号排列，
    因此统计结果与并行度无关。
    """
    problems = config.problems()
    if problems:
        raise ValueError(f"实验条件 {config.name} 无效: {'; '.join(problems)}")

    seeds = [derive_seed(config.master_seed, i) for i in range(config.iterations)]
    logger.info(f"开始实验条件 {config.name}: {config.iterations} 次迭代, n_jobs={n_jobs}")
    if n_jobs == 1:
        records = [run_iteration(config, seed) for seed in seeds]
    else:
        records = Parallel(n_jobs=n_jobs, backend=backend)(
            delayed(run_iteration)(config, seed) for seed in seeds
        )

    stats = classify_and_aggregate(records, config.classification_threshold)
    excluded = {k: v for k, v in stats.exclusions.items() if v}
    if excluded:
        logger.warning(f"实验条件 {config.name} 排除情况: {excluded}")
    logger.info(f"实验条件 {config.name} 完成: {stats.completions} 次完成, mean={stats.mean}")
    return ConditionResult(config=config, stats=stats, records=list(records))
