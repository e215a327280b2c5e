"""蒙特卡洛实验流程：种子派生、单次迭代、汇总和并行执行"""

import numpy as np
import pytest

import experiments
from conftest import make_network
from experiments import (
    ConditionConfig,
    OracleKind,
    OracleSpec,
    RecordStatus,
    RunRecord,
    classify_and_aggregate,
    derive_seed,
    pick_path,
    run_condition,
    run_iteration,
)
from generators import TopologyKind, TopologySpec, gen_layered
from pruning import PruneConfig, PruneKind
from trainer import TrainingConfig


def _perfect(**overrides):
    values = dict(
        name='perfect',
        topology=TopologySpec(TopologyKind.PERFECT, n_facts=10, n_rules=10),
        training=TrainingConfig(epochs=5),
        oracle=OracleSpec(kind=OracleKind.CLONE_OF_TRAINEE),
        iterations=40,
        master_seed=7,
    )
    values.update(overrides)
    return ConditionConfig(**values)


def _random(**overrides):
    values = dict(
        name='random',
        topology=TopologySpec(TopologyKind.RANDOM, n_facts=10, n_rules=10),
        training=TrainingConfig(epochs=5),
        oracle=OracleSpec(n_rules=10),
        iterations=40,
        master_seed=11,
    )
    values.update(overrides)
    return ConditionConfig(**values)


def _completed(error):
    return RunRecord(seed=0, status=RecordStatus.COMPLETED, error=error)


# ==================== derive_seed ====================

def test_derive_seed_is_stable():
    assert derive_seed(42, 3) == derive_seed(42, 3)


def test_derive_seed_distinguishes_inputs():
    seeds = {derive_seed(master, index) for master in range(5) for index in range(200)}
    assert len(seeds) == 1000


# ==================== run_iteration ====================

def test_iteration_is_reproducible():
    config = _random()
    for index in range(10):
        seed = derive_seed(config.master_seed, index)
        assert run_iteration(config, seed) == run_iteration(config, seed)


def test_copied_weights_give_zero_error():
    result = run_condition(_perfect(copy_weights=True, iterations=100))
    completed = [r for r in result.records if r.status == RecordStatus.COMPLETED]
    assert completed
    assert all(r.error == 0.0 for r in completed)
    assert all(r.initial_error == 0.0 for r in completed)


def test_zero_epochs_keeps_structural_copy_error():
    result = run_condition(_perfect(training=TrainingConfig(epochs=0), iterations=100))
    completed = [r for r in result.records if r.status == RecordStatus.COMPLETED]
    assert completed
    assert all(r.error == r.initial_error for r in completed)


def test_single_iteration_condition():
    stats = run_condition(_random(iterations=1)).stats
    assert stats.iterations == 1
    assert stats.completions + sum(stats.exclusions.values()) == 1
    if stats.completions == 0:
        assert stats.mean is None
    else:
        assert stats.mean == stats.median


def test_completed_errors_in_unit_interval():
    result = run_condition(_random())
    for r in result.records:
        if r.status == RecordStatus.COMPLETED:
            assert 0.0 <= r.error <= 1.0
            assert r.source != r.target
        else:
            assert r.error is None


def test_disconnected_trainee_is_mostly_excluded(monkeypatch):
    # 两个互不相连的簇：只有 4 个有序 (源, 目标) 对可达
    def two_clusters(spec, rng):
        return make_network(6, [(0, 1, 2, 0.5, 0.5), (3, 4, 5, 0.5, 0.5)])

    monkeypatch.setattr(experiments, 'build_network', two_clusters)
    config = _random(topology=TopologySpec(TopologyKind.RANDOM, n_facts=6, n_rules=2),
                     oracle=OracleSpec(n_rules=10), iterations=200)
    stats = run_condition(config).stats
    assert stats.exclusions[RecordStatus.EXCLUDED_NO_PATH.value] > 100


def test_layered_paths_cross_the_network():
    config = _random(
        name='layered',
        topology=TopologySpec(TopologyKind.LAYERED, depth=3, interior_width=3, boundary_width=3),
        oracle=OracleSpec(n_rules=12),
        iterations=30,
    )
    records = run_condition(config).records
    assert any(r.source is not None for r in records)
    for r in records:
        if r.source is None:
            assert r.status == RecordStatus.EXCLUDED_NO_PATH
            continue
        assert r.source in (0, 1, 2)
        assert r.target in (6, 7, 8)


def test_layered_source_is_never_written_by_oracle(rng):
    trainee = gen_layered(3, 3, 3, rng)
    # 完美网络写入 f0 和 f1，只剩 f2 能保持初始值
    perfect = make_network(9, [(3, 4, 0, 0.5, 0.5), (5, 6, 1, 0.5, 0.5)])
    for seed in range(20):
        source, target = pick_path(perfect, trainee, np.random.default_rng(seed))
        assert source == 2
        assert target in (6, 7, 8)

    perfect = make_network(9, [(3, 4, 0, 0.5, 0.5), (5, 6, 1, 0.5, 0.5), (7, 8, 2, 0.5, 0.5)])
    assert pick_path(perfect, trainee, rng) is None


def test_pruned_condition_reports_rules_after_prune():
    prune = PruneConfig(kind=PruneKind.ADAPTIVE, prune_epoch=2)
    result = run_condition(_perfect(training=TrainingConfig(epochs=5, prune=prune)))
    for r in result.records:
        if r.status == RecordStatus.COMPLETED:
            assert 1 <= r.rules_after_prune <= 10


# ==================== classify_and_aggregate ====================

def test_classification_example():
    stats = classify_and_aggregate([_completed(0.02), _completed(0.04), _completed(0.30)], 0.10)
    assert (stats.ct_low, stats.ct_high, stats.completions) == (2, 1, 3)
    assert stats.av_low == pytest.approx(0.03)
    assert stats.av_high == pytest.approx(0.30)
    assert stats.mean == pytest.approx(0.12)
    assert stats.median == pytest.approx(0.04)


def test_threshold_value_counts_as_low():
    stats = classify_and_aggregate([_completed(0.10)], 0.10)
    assert (stats.ct_low, stats.ct_high) == (1, 0)
    assert stats.av_high is None


def test_all_excluded_has_no_statistics():
    records = [RunRecord(seed=i, status=RecordStatus.EXCLUDED_NO_PATH) for i in range(3)]
    records.append(RunRecord(seed=9, status=RecordStatus.DROPPED))
    stats = classify_and_aggregate(records, 0.10)
    assert stats.completions == 0
    assert stats.mean is None and stats.median is None
    assert stats.av_high is None and stats.av_low is None
    assert stats.exclusions[RecordStatus.EXCLUDED_NO_PATH.value] == 3
    assert stats.exclusions[RecordStatus.DROPPED.value] == 1
    assert stats.iterations == 4


# ==================== run_condition ====================

def test_status_counts_cover_every_iteration():
    stats = run_condition(_random(iterations=60)).stats
    assert stats.ct_high + stats.ct_low == stats.completions
    assert stats.completions + sum(stats.exclusions.values()) == 60


def test_parallel_matches_serial():
    config = _random()
    serial = run_condition(config)
    parallel = run_condition(config, n_jobs=8, backend='threading')
    assert parallel.stats == serial.stats
    assert parallel.records == serial.records


def test_run_condition_rejects_invalid_config():
    with pytest.raises(ValueError, match='iterations'):
        run_condition(_random(iterations=0))


def test_ungeneratable_oracle_is_rejected_before_running():
    # 3 个事实最多构成 3 条不重复规则
    with pytest.raises(ValueError, match='oracle rules'):
        run_condition(_random(oracle=OracleSpec(n_facts=3, n_rules=10), iterations=5))


# ==================== ConditionConfig ====================

@pytest.mark.parametrize('config, fragment', [
    (_perfect(oracle=OracleSpec(n_rules=10)), 'clone_of_trainee'),
    (_random(oracle=OracleSpec()), 'oracle rules'),
    (_random(copy_weights=True), 'copy_weights'),
    (_random(classification_threshold=0.0), 'threshold'),
    (_random(master_seed=-1), 'seed'),
    (_random(topology=TopologySpec(TopologyKind.DENSE, n_facts=3, density_pct=10),
             oracle=OracleSpec(n_facts=3, n_rules=3)), '0条规则'),
    (_random(oracle=OracleSpec(n_facts=3, n_rules=10)), 'oracle rules'),
    (_random(topology=TopologySpec(TopologyKind.LAYERED, depth=3, interior_width=3, boundary_width=3),
             oracle=OracleSpec(n_rules=300)), 'oracle rules'),
    (_random(topology=TopologySpec(TopologyKind.LAYERED, depth=5, interior_width=5),
             oracle=OracleSpec(n_facts=10, n_rules=40)), '分层'),
])
def test_condition_problems(config, fragment):
    assert any(fragment in p for p in config.problems())


def test_oracle_facts_default_to_trainee():
    layered = _random(topology=TopologySpec(TopologyKind.LAYERED, depth=5, interior_width=5),
                      oracle=OracleSpec(n_rules=100))
    assert layered.oracle_facts() == 25
    assert layered.problems() == []
    assert _perfect().problems() == []


def test_to_dict_uses_suite_keys():
    data = _random(topology=TopologySpec(TopologyKind.LAYERED, depth=5, interior_width=5),
                   oracle=OracleSpec(n_rules=100)).to_dict()
    assert data['topology'] == {'kind': 'layered', 'facts': None, 'rules': None, 'density': None,
                                'depth': 5, 'width': 5, 'boundary_width': 5}
    assert data['oracle'] == {'facts': 25, 'rules': 100}
    assert 'prune' not in data
    assert 'oracle' not in _perfect().to_dict()
