"""规则-事实网络：校验、求值、连通性和归一化"""

from collections import defaultdict

import networkx as nx
import numpy as np
import pytest

from conftest import make_network
from network import (
    DANGLING_ID,
    DUPLICATE_RULE,
    FACT_IDS,
    PASS_CAP_FACTOR,
    SAME_INPUTS,
    SELF_LOOP,
    WEIGHT_RANGE,
    WEIGHT_SUM,
    Fact,
    NetworkInputError,
    Rule,
    RuleFactNetwork,
    RunStatus,
    canonical_assignment,
    evaluate,
    reachable,
    renormalize,
    restrict_assignment,
    to_digraph,
    validate,
)


# ==================== validate ====================

def test_valid_single_rule_has_empty_report(single_rule):
    report = validate(single_rule)
    assert report.is_valid
    assert report.violations == []


def test_weight_sum_violation():
    network = make_network(3, [(0, 1, 2, 0.6, 0.6)])
    assert WEIGHT_SUM in validate(network).kinds()


def test_weight_out_of_range():
    network = make_network(3, [(0, 1, 2, 1.5, -0.5)])
    kinds = validate(network).kinds()
    assert WEIGHT_RANGE in kinds
    assert WEIGHT_SUM not in kinds


def test_duplicate_rule_ignores_input_order():
    network = make_network(8, [(3, 5, 7, 0.5, 0.5), (5, 3, 7, 0.2, 0.8)])
    report = validate(network)
    assert report.kinds() == {DUPLICATE_RULE}


def test_structural_violations_are_all_reported():
    network = make_network(3, [(0, 0, 1, 0.5, 0.5), (0, 1, 1, 0.5, 0.5), (0, 1, 9, 0.5, 0.5)])
    kinds = validate(network).kinds()
    assert {SAME_INPUTS, SELF_LOOP, DANGLING_ID} <= kinds


def test_fact_ids_must_be_contiguous():
    network = RuleFactNetwork(facts=[Fact(id=0), Fact(id=2)], rules=[])
    assert validate(network).kinds() == {FACT_IDS}


# ==================== evaluate ====================

def test_pass_through_weight():
    network = make_network(3, [(0, 1, 2, 1.0, 0.0)])
    outcome = evaluate(network, {0: 0.99}, 2)
    assert outcome.status == RunStatus.COMPLETED
    assert outcome.target_value == pytest.approx(0.99)
    assert outcome.passes == 2


def test_nothing_reads_assigned_fact_completes_immediately():
    network = make_network(4, [(1, 2, 3, 0.5, 0.5)])
    outcome = evaluate(network, {0: 0.99}, 3)
    assert outcome.status == RunStatus.IMMEDIATE_COMPLETION
    assert outcome.target_value == 0.0
    assert outcome.passes == 1


def test_no_rule_network_completes_immediately():
    network = RuleFactNetwork(facts=[Fact(id=i) for i in range(3)])
    outcome = evaluate(network, canonical_assignment(0), 2)
    assert outcome.status == RunStatus.IMMEDIATE_COMPLETION


def test_chain_hand_evaluation():
    network = make_network(5, [(0, 1, 2, 0.5, 0.5), (2, 3, 4, 0.5, 0.5)])
    outcome = evaluate(network, {0: 0.99}, 4)
    assert outcome.status == RunStatus.COMPLETED
    assert outcome.target_value == pytest.approx(0.99 * 0.5 * 0.5)


def test_firing_order_does_not_change_fixpoint():
    # 下游规则ID较小，需要多一轮
    network = make_network(5, [(2, 3, 4, 0.5, 0.5), (0, 1, 2, 0.5, 0.5)])
    outcome = evaluate(network, {0: 0.99}, 4)
    assert outcome.target_value == pytest.approx(0.2475)
    assert outcome.passes == 3


def test_assigned_fact_is_overwritten_by_its_writer():
    network = make_network(4, [(1, 2, 0, 0.5, 0.5), (0, 1, 3, 1.0, 0.0)])
    outcome = evaluate(network, {0: 0.99}, 3)
    assert outcome.status == RunStatus.COMPLETED
    assert outcome.fact_values[0] == 0.0
    assert outcome.target_value == 0.0


def test_zero_inputs_still_fire():
    # 规则1 的输入都为0，但它最后写入 f2
    network = make_network(5, [(0, 1, 2, 1.0, 0.0), (3, 4, 2, 0.5, 0.5)])
    outcome = evaluate(network, {0: 0.99}, 2)
    assert outcome.target_value == 0.0
    assert outcome.status == RunStatus.IMMEDIATE_COMPLETION


def test_highest_rule_id_decides_shared_output():
    network = make_network(5, [(3, 4, 2, 0.5, 0.5), (0, 1, 2, 1.0, 0.0)])
    outcome = evaluate(network, {0: 0.99}, 2)
    assert outcome.target_value == pytest.approx(0.99)
    assert outcome.status == RunStatus.COMPLETED


def test_suspended_rules_do_not_fire(chain):
    chain.rules[1].suspended = True
    outcome = evaluate(chain, {0: 0.99}, 4)
    assert outcome.target_value == 0.0


def test_pass_cap_reports_non_convergence(chain):
    outcome = evaluate(chain, {0: 0.99}, 4, pass_cap=1)
    assert outcome.status == RunStatus.NON_CONVERGING
    assert outcome.passes == 1


def test_values_stay_in_unit_interval(rng):
    from generators import gen_random
    for _ in range(20):
        network = gen_random(8, 12, rng)
        outcome = evaluate(network, {0: 0.99, 1: 1.0}, 5)
        assert all(0.0 <= v <= 1.0 for v in outcome.fact_values)


def _random_acyclic_network(rng, n_facts, n_rules):
    """输出编号总大于输入编号，规则ID顺序随机"""
    specs = []
    for _ in range(n_rules):
        output = int(rng.integers(2, n_facts))
        a, b = (int(x) for x in rng.choice(output, size=2, replace=False))
        w1 = float(rng.uniform())
        specs.append((a, b, output, w1, 1.0 - w1))
    return make_network(n_facts, [specs[i] for i in rng.permutation(n_rules)])


def _acyclic_fixpoint(network, assignment):
    """
    按拓扑序直接写出不动点：规则读到的输入值是ID更小的规则对该事实的最近一次写入，
    没有更早的写入时读该事实的最终值（ID最大的写入规则的输出，或初始值）
    """
    writers = defaultdict(list)
    for rule in network.active_rules():
        writers[rule.output].append(rule)
    fired = {}
    final = {f.id: assignment.get(f.id, 0.0) for f in network.facts}

    def seen(rule, fact_id):
        earlier = [q for q in writers[fact_id] if q.id < rule.id]
        return fired[earlier[-1].id] if earlier else final[fact_id]

    for fact_id in nx.topological_sort(to_digraph(network)):
        for rule in writers[fact_id]:
            value = rule.w1 * seen(rule, rule.input1) + rule.w2 * seen(rule, rule.input2)
            fired[rule.id] = min(1.0, max(0.0, value))
        if writers[fact_id]:
            final[fact_id] = fired[writers[fact_id][-1].id]
    return [final[f.id] for f in network.facts]


def test_acyclic_networks_match_topological_fixpoint():
    for seed in range(300):
        rng = np.random.default_rng(seed)
        n_facts = int(rng.integers(3, 13))
        network = _random_acyclic_network(rng, n_facts, int(rng.integers(1, 3 * n_facts)))
        assigned = rng.choice(n_facts, size=int(rng.integers(1, 4)), replace=False)
        assignment = {int(f): float(rng.uniform()) for f in assigned}
        target = int(rng.integers(n_facts))

        outcome = evaluate(network, assignment, target)
        expected = _acyclic_fixpoint(network, assignment)
        assert outcome.status != RunStatus.NON_CONVERGING, seed
        assert list(outcome.fact_values) == pytest.approx(expected, abs=1e-9), seed
        assert outcome.target_value == pytest.approx(expected[target], abs=1e-9), seed


def test_evaluate_terminates_on_large_random_networks():
    from generators import gen_random
    for seed in range(10):
        rng = np.random.default_rng(seed)
        n_rules = int(rng.integers(50, 201))
        network = gen_random(20, n_rules, rng)
        outcome = evaluate(network, canonical_assignment(int(rng.integers(20))), int(rng.integers(20)))
        assert isinstance(outcome.status, RunStatus)
        assert 1 <= outcome.passes <= PASS_CAP_FACTOR * n_rules


@pytest.mark.parametrize('assignment, target', [
    ({7: 0.5}, 2),
    ({0: 1.5}, 2),
    ({0: 0.5}, 3),
])
def test_bad_inputs_raise(single_rule, assignment, target):
    with pytest.raises(NetworkInputError):
        evaluate(single_rule, assignment, target)


def test_restrict_assignment_drops_foreign_ids(single_rule):
    assert restrict_assignment({0: 0.99, 5: 0.3}, single_rule) == {0: 0.99}


# ==================== reachable ====================

def test_direct_edge_is_reachable(single_rule):
    assert reachable(single_rule, 0, 2)


def test_edges_are_directed(single_rule):
    assert not reachable(single_rule, 2, 0)


def test_reachability_is_transitive(chain):
    assert reachable(chain, 0, 4)
    assert not reachable(chain, 3, 2)


def test_suspended_rule_breaks_path(chain):
    chain.rules[0].suspended = True
    assert not reachable(chain, 0, 4)


def test_reachable_matches_networkx_descendants(rng):
    from generators import gen_random
    network = gen_random(10, 10, rng)
    graph = to_digraph(network)
    for source in range(10):
        descendants = nx.descendants(graph, source)
        for target in range(10):
            if target != source:
                assert reachable(network, source, target) == (target in descendants)


def test_unknown_fact_in_reachable_raises(single_rule):
    with pytest.raises(NetworkInputError):
        reachable(single_rule, 0, 9)


# ==================== renormalize ====================

def _rule(w1, w2):
    return Rule(id=0, input1=0, input2=1, output=2, w1=w1, w2=w2)


def test_normalized_weights_unchanged():
    rule = renormalize(_rule(0.7, 0.3))
    assert (rule.w1, rule.w2) == pytest.approx((0.7, 0.3))


def test_clamp_then_scale():
    rule = renormalize(_rule(1.2, 0.1))
    assert rule.w1 == pytest.approx(1.0 / 1.1)
    assert rule.w2 == pytest.approx(0.1 / 1.1)


def test_degenerate_weights_reset():
    rule = renormalize(_rule(-0.2, 0.0))
    assert (rule.w1, rule.w2) == (0.5, 0.5)


def test_renormalize_keeps_structure():
    original = _rule(3.0, 1.0)
    rule = renormalize(original)
    assert (rule.id, rule.input1, rule.input2, rule.output) == (0, 0, 1, 2)
    assert rule.w1 + rule.w2 == pytest.approx(1.0)
    assert original.w1 == 3.0
