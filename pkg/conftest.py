"""测试共用的小网络"""

import numpy as np
import pytest

from network import Fact, Rule, RuleFactNetwork


def make_network(n_facts, rules):
    """rules: (input1, input2, output, w1, w2) 列表，规则ID按顺序编号"""
    return RuleFactNetwork(
        facts=[Fact(id=i) for i in range(n_facts)],
        rules=[Rule(id=i, input1=a, input2=b, output=o, w1=w1, w2=w2)
               for i, (a, b, o, w1, w2) in enumerate(rules)],
    )


@pytest.fixture
def rng():
    return np.random.default_rng(1234)


@pytest.fixture
def single_rule():
    """f0,f1 → f2"""
    return make_network(3, [(0, 1, 2, 0.6, 0.4)])


@pytest.fixture
def chain():
    """规则0: f0,f1 → f2 (0.5, 0.5)；规则1: f2,f3 → f4 (0.6, 0.4)"""
    return make_network(5, [(0, 1, 2, 0.5, 0.5), (2, 3, 4, 0.6, 0.4)])


@pytest.fixture
def diamond():
    """
    规则0 输出 f2，经两条路径到达目标 f4：
    规则1 直接 (0.6)，或 规则2 → f3 → 规则3 (0.9 · 1.0)
    """
    return make_network(8, [
        (0, 1, 2, 0.5, 0.5),
        (2, 5, 4, 0.6, 0.4),
        (2, 6, 3, 0.9, 0.1),
        (3, 7, 4, 1.0, 0.0),
    ])
