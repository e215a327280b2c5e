#!/usr/bin/env python3
# -*- coding: utf-8 -*-
"""
网络生成模块
使用带种子的随机数生成器构造完美、随机、全连接、稠密和分层网络
"""

from __future__ import annotations

import logging
from dataclasses import dataclass, replace
from enum import Enum
from itertools import combinations
from typing import List, Optional, Sequence, Tuple

import numpy as np

from network import Fact, Rule, RuleFactNetwork, renormalize

logger = logging.getLogger('rulefact')

DEFAULT_BOUNDARY_WIDTH = 5


class GenerationError(ValueError):
    """无法按参数生成网络"""


class TopologyKind(Enum):
    PERFECT = 'perfect'
    RANDOM = 'random'
    FULLY_CONNECTED = 'fully_connected'
    DENSE = 'dense'
    LAYERED = 'layered'


@dataclass(frozen=True)
class TopologySpec:
    """网络拓扑参数"""
    kind: TopologyKind
    n_facts: Optional[int] = None
    n_rules: Optional[int] = None
    density_pct: Optional[int] = None
    depth: Optional[int] = None
    interior_width: Optional[int] = None
    boundary_width: int = DEFAULT_BOUNDARY_WIDTH

    def problems(self) -> List[str]:
        """返回参数问题列表，空列表表示合法"""
        problems = []
        kind = self.kind
        if kind in (TopologyKind.PERFECT, TopologyKind.RANDOM):
            if self.n_facts is None or self.n_facts < 3:
                problems.append("facts 必须 ≥ 3")
            if self.n_rules is None or self.n_rules < 1:
                problems.append("rules 必须 ≥ 1")
            elif (self.n_facts or 0) >= 3 and self.n_rules > rule_capacity(self.n_facts):
                problems.append(f"{self.n_facts} 个事实最多只能构成 {rule_capacity(self.n_facts)} 条不重复规则")
        elif kind == TopologyKind.FULLY_CONNECTED:
            if self.n_facts is None or self.n_facts < 3:
                problems.append("facts 必须 ≥ 3")
        elif kind == TopologyKind.DENSE:
            if self.n_facts is None or self.n_facts < 3:
                problems.append("facts 必须 ≥ 3")
            if self.density_pct is None or not 1 <= self.density_pct <= 100:
                problems.append("density 必须在 1..100 之间")
            elif (self.n_facts or 0) >= 3 and dense_rule_count(self.n_facts, self.density_pct) == 0:
                problems.append(f"density {self.density_pct}% 下 {self.n_facts} 个事实得到0条规则")
        elif kind == TopologyKind.LAYERED:
            if self.depth is None or self.depth < 2:
                problems.append("depth 必须 ≥ 2")
            if self.interior_width is None or self.interior_width < 2:
                problems.append("width 必须 ≥ 2")
            if self.boundary_width < 2:
                problems.append("boundary_width 必须 ≥ 2")
        return problems

    def fact_count(self) -> int:
        """该拓扑生成的事实数"""
        if self.kind == TopologyKind.LAYERED:
            return 2 * self.boundary_width + self.interior_width * (self.depth - 2)
        return int(self.n_facts)


# ==================== 规模工具 ====================

def rule_capacity(n_facts: int) -> int:
    """n 个事实能构成的不重复规则数：输出 n 种 × 其余事实的无序输入对"""
    return n_facts * (n_facts - 1) * (n_facts - 2) // 2


def dense_rule_count(n_facts: int, density_pct: int) -> int:
    """稠密网络的规则数 ⌊density/100 · C(n,2)⌋"""
    return density_pct * (n_facts * (n_facts - 1) // 2) // 100


# ==================== 权重工具 ====================

def random_weights(rng: np.random.Generator) -> Tuple[float, float]:
    """在 (0,1) 内均匀抽取两个权重并归一化"""
    u1, u2 = (float(u) for u in rng.uniform(0.0, 1.0, size=2))
    total = u1 + u2
    if total <= 0.0:
        return 0.5, 0.5
    return u1 / total, u2 / total


def _blank_facts(n_facts: int) -> List[Fact]:
    return [Fact(id=i) for i in range(n_facts)]


def _pair_rules(pairs: Sequence[Tuple[int, int]], n_facts: int, rng: np.random.Generator) -> List[Rule]:
    """每个无序事实对建一条规则，输出从其余事实中均匀抽取"""
    rules = []
    for rule_id, (a, b) in enumerate(pairs):
        others = [f for f in range(n_facts) if f != a and f != b]
        output = int(others[rng.integers(len(others))])
        w1, w2 = random_weights(rng)
        rules.append(Rule(id=rule_id, input1=a, input2=b, output=output, w1=w1, w2=w2))
    return rules


# ==================== 生成器 ====================

def gen_random(n_facts: int, n_rules: int, rng: np.random.Generator) -> RuleFactNetwork:
    """
    随机网络：规则的输入和输出事实随机选取，重复规则重新抽取

    Args:
        n_facts: 事实数（≥3）
        n_rules: 规则数（≥1）
        rng: 带种子的随机数生成器
    """
    if n_facts < 3:
        raise GenerationError(f"随机网络至少需要3个事实: {n_facts}")
    if n_rules < 1:
        raise GenerationError(f"随机网络至少需要1条规则: {n_rules}")
    capacity = rule_capacity(n_facts)
    if n_rules > capacity:
        raise GenerationError(f"{n_facts} 个事实最多只能构成 {capacity} 条不重复规则，无法生成 {n_rules} 条")

    seen = set()
    rules = []
    while len(rules) < n_rules:
        output = int(rng.integers(n_facts))
        others = [f for f in range(n_facts) if f != output]
        a, b = (int(x) for x in rng.choice(others, size=2, replace=False))
        key = (frozenset((a, b)), output)
        if key in seen:
            continue
        seen.add(key)
        w1, w2 = random_weights(rng)
        rules.append(Rule(id=len(rules), input1=a, input2=b, output=output, w1=w1, w2=w2))

    return RuleFactNetwork(facts=_blank_facts(n_facts), rules=rules)


def gen_fully_connected(n_facts: int, rng: np.random.Generator) -> RuleFactNetwork:
    """全连接网络：每个无序事实对恰好一条规则"""
    if n_facts < 3:
        raise GenerationError(f"全连接网络至少需要3个事实: {n_facts}")
    pairs = list(combinations(range(n_facts), 2))
    return RuleFactNetwork(facts=_blank_facts(n_facts), rules=_pair_rules(pairs, n_facts, rng))


def gen_dense(n_facts: int, density_pct: int, rng: np.random.Generator) -> RuleFactNetwork:
    """稠密网络：无放回抽取 ⌊density/100 · C(n,2)⌋ 个事实对"""
    if n_facts < 3:
        raise GenerationError(f"稠密网络至少需要3个事实: {n_facts}")
    if not 1 <= density_pct <= 100:
        raise GenerationError(f"密度必须在 1..100 之间: {density_pct}")

    pairs = list(combinations(range(n_facts), 2))
    count = dense_rule_count(n_facts, density_pct)
    if count == 0:
        raise GenerationError(f"密度 {density_pct}% 下 {n_facts} 个事实得到0条规则")
    chosen = np.sort(rng.choice(len(pairs), size=count, replace=False))
    return RuleFactNetwork(
        facts=_blank_facts(n_facts),
        rules=_pair_rules([pairs[int(i)] for i in chosen], n_facts, rng),
    )


def gen_layered(depth: int, interior_width: int, boundary_width: int,
                rng: np.random.Generator) -> RuleFactNetwork:
    """
    分层网络：相邻层之间全连接

    对每对相邻层 (L, L+1) 和 L+1 层的每个节点 j，用 L 层的循环相邻对
    (i, i+1 mod w_L) 作为输入建 w_L 条规则，输出为 j。
    w_L = 2 时两个循环对是同一无序对，只建一条。
    """
    if depth < 2:
        raise GenerationError(f"分层网络深度必须 ≥ 2: {depth}")
    if interior_width < 2 or boundary_width < 2:
        raise GenerationError("分层网络宽度必须 ≥ 2")

    sizes = [boundary_width] + [interior_width] * (depth - 2) + [boundary_width]
    facts: List[Fact] = []
    layers: List[List[int]] = []
    for layer, size in enumerate(sizes):
        members = list(range(len(facts), len(facts) + size))
        facts.extend(Fact(id=i, layer=layer) for i in members)
        layers.append(members)

    rules: List[Rule] = []
    for lower, upper in zip(layers, layers[1:]):
        width = len(lower)
        input_pairs = []
        for i in range(width):
            pair = (lower[i], lower[(i + 1) % width])
            if frozenset(pair) not in {frozenset(p) for p in input_pairs}:
                input_pairs.append(pair)
        for j in upper:
            for a, b in input_pairs:
                w1, w2 = random_weights(rng)
                rules.append(Rule(id=len(rules), input1=a, input2=b, output=j, w1=w1, w2=w2))

    logger.debug(f"生成分层网络: 层规模 {sizes}, {len(facts)} 个事实, {len(rules)} 条规则")
    return RuleFactNetwork(facts=facts, rules=rules)


def clone_structure_fresh_weights(network: RuleFactNetwork, rng: np.random.Generator) -> RuleFactNetwork:
    """复制规则-事实结构，重新抽取全部规则权重"""
    clone = network.copy()
    fresh = []
    for rule in clone.rules:
        w1, w2 = random_weights(rng)
        fresh.append(replace(rule, w1=w1, w2=w2))
    clone.rules = fresh
    return clone


def perturb_weights(network: RuleFactNetwork, noise: float, rng: np.random.Generator) -> RuleFactNetwork:
    """
    给权重加高斯噪声后重新归一化，得到与原网络差异已知的副本

    Args:
        network: 原网络
        noise: 噪声标准差（≥0）
        rng: 带种子的随机数生成器
    """
    if noise < 0:
        raise GenerationError(f"噪声水平不能为负: {noise}")
    perturbed = network.copy()
    rules = []
    for rule in perturbed.rules:
        shift = float(rng.normal(0.0, noise)) if noise > 0 else 0.0
        rules.append(renormalize(replace(rule, w1=rule.w1 + shift, w2=rule.w2 - shift)))
    perturbed.rules = rules
    return perturbed


def build_network(spec: TopologySpec, rng: np.random.Generator) -> RuleFactNetwork:
    """按拓扑参数分派到对应的生成器"""
    problems = spec.problems()
    if problems:
        raise GenerationError(f"拓扑参数无效 ({spec.kind.value}): {'; '.join(problems)}")

    if spec.kind in (TopologyKind.PERFECT, TopologyKind.RANDOM):
        return gen_random(spec.n_facts, spec.n_rules, rng)
    if spec.kind == TopologyKind.FULLY_CONNECTED:
        return gen_fully_connected(spec.n_facts, rng)
    if spec.kind == TopologyKind.DENSE:
        return gen_dense(spec.n_facts, spec.density_pct, rng)
    return gen_layered(spec.depth, spec.interior_width, spec.boundary_width, rng)
