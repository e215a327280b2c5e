"""实验套件文件的解析、校验和管理"""

import os

import pytest

from config import Config
from experiments import ConditionConfig, OracleKind, OracleSpec
from generators import TopologyKind, TopologySpec
from pruning import PruneKind, PruneScope
from suite_manager import (
    SuiteFormatError,
    SuiteManager,
    SuiteNotFoundError,
    SuiteValidationError,
    parse_suite,
)
from trainer import TrainingApproach, TrainingConfig

MINIMAL = """
suite: tiny
conditions:
  - name: only
    topology: {kind: random, facts: 10, rules: 10}
    oracle: {rules: 10}
"""


def _write(tmp_path, text, name='suite.yaml'):
    path = tmp_path / name
    path.write_text(text, encoding='utf-8')
    return str(path)


# ==================== parse_suite ====================

def test_shipped_perfect_condition():
    suite = parse_suite(os.path.join(Config.SUITES_DIR, 'network_types_small.yaml'))
    assert suite.name == 'network_types_small'
    assert [c.name for c in suite.conditions] == ['perfect', 'random', 'fully_connected', 'dense_50', 'layered_5x5']
    assert suite.conditions[0] == ConditionConfig(
        name='perfect',
        topology=TopologySpec(TopologyKind.PERFECT, n_facts=10, n_rules=10),
        training=TrainingConfig(approach=TrainingApproach.SAME_FACTS, epochs=100, velocity=0.1),
        oracle=OracleSpec(kind=OracleKind.CLONE_OF_TRAINEE),
        iterations=1000,
        master_seed=101,
    )


def test_every_shipped_suite_parses():
    manager = SuiteManager(Config.SUITES_DIR)
    filenames = manager.list_suites()
    assert len(filenames) >= 10
    for filename in filenames:
        suite = manager.load_suite(filename)
        assert suite.conditions, filename
        assert all(c.problems() == [] for c in suite.conditions)


def test_minimal_suite_defaults(tmp_path):
    suite = parse_suite(_write(tmp_path, MINIMAL))
    condition = suite.conditions[0]
    assert condition.iterations == 1000
    assert condition.master_seed == 0
    assert condition.classification_threshold == 0.10
    assert condition.training == TrainingConfig()
    assert condition.oracle == OracleSpec(kind=OracleKind.RANDOM, n_rules=10)
    assert suite.output_dir == os.path.join(Config.DATA_DIR, 'tiny')


def test_defaults_merge_section_keys(tmp_path):
    text = """
suite: merged
output_dir: /tmp/merged_out
defaults:
  topology: {kind: layered, depth: 5, width: 5}
  oracle: {facts: 25, rules: 100}
  training: {epochs: 30, velocity: 0.2}
  iterations: 50
conditions:
  - name: base
  - name: wide
    topology: {width: 10}
    oracle: {facts: 40}
    training: {approach: random_facts}
    prune: {kind: contribution, threshold: 0.05, scope: any_fact, epoch: 20}
"""
    suite = parse_suite(_write(tmp_path, text))
    base, wide = suite.conditions
    assert suite.output_dir == '/tmp/merged_out'
    assert base.topology.interior_width == 5
    assert wide.topology == TopologySpec(TopologyKind.LAYERED, depth=5, interior_width=10)
    assert wide.oracle == OracleSpec(n_facts=40, n_rules=100)
    assert wide.training.epochs == 30
    assert wide.training.velocity == 0.2
    assert wide.training.approach == TrainingApproach.RANDOM_FACTS
    assert wide.training.prune.kind == PruneKind.CONTRIBUTION
    assert wide.training.prune.scope == PruneScope.ANY_FACT
    assert wide.training.prune.prune_epoch == 20
    assert base.training.prune is None
    assert wide.iterations == 50


def test_missing_file(tmp_path):
    with pytest.raises(SuiteNotFoundError):
        parse_suite(str(tmp_path / 'absent.yaml'))


def test_empty_file(tmp_path):
    with pytest.raises(SuiteFormatError, match='为空'):
        parse_suite(_write(tmp_path, ''))


def test_yaml_syntax_error(tmp_path):
    with pytest.raises(SuiteFormatError):
        parse_suite(_write(tmp_path, 'suite: [unclosed\n'))


def test_unknown_key_is_named(tmp_path):
    text = MINIMAL + "    training: {velocty: 0.1}\n"
    with pytest.raises(SuiteFormatError, match='velocty'):
        parse_suite(_write(tmp_path, text))


@pytest.mark.parametrize('line, error', [
    ("    iterations: many\n", SuiteFormatError),
    ("    copy_weights: 1\n", SuiteFormatError),
    ("    training: {approach: guess}\n", SuiteFormatError),
    ("    iterations: 0\n", SuiteValidationError),
    ("    prune: {kind: contribution}\n", SuiteValidationError),
    ("    prune: {kind: adaptive, epoch: 100}\n", SuiteValidationError),
])
def test_invalid_condition_values(tmp_path, line, error):
    with pytest.raises(error):
        parse_suite(_write(tmp_path, MINIMAL + line))


@pytest.mark.parametrize('body, fragment', [
    ("    topology: {kind: dense, facts: 3, density: 10}\n    oracle: {facts: 3, rules: 3}\n", '0条规则'),
    ("    topology: {kind: random, facts: 3, rules: 3}\n    oracle: {facts: 3, rules: 10}\n", 'oracle rules'),
    ("    topology: {kind: random, facts: 3, rules: 4}\n    oracle: {facts: 3, rules: 3}\n", '不重复规则'),
])
def test_ungeneratable_networks_are_rejected_at_parse_time(tmp_path, body, fragment):
    text = "suite: tiny\nconditions:\n  - name: only\n" + body
    with pytest.raises(SuiteValidationError, match=fragment):
        parse_suite(_write(tmp_path, text))


def test_duplicate_condition_names(tmp_path):
    text = MINIMAL + """
  - name: only
    topology: {kind: fully_connected, facts: 5}
    oracle: {rules: 5}
"""
    with pytest.raises(SuiteValidationError, match='only'):
        parse_suite(_write(tmp_path, text))


def test_perfect_topology_rejects_oracle(tmp_path):
    text = """
suite: bad
conditions:
  - name: perfect
    topology: {kind: perfect, facts: 10, rules: 10}
    oracle: {rules: 10}
"""
    with pytest.raises(SuiteValidationError):
        parse_suite(_write(tmp_path, text))


def test_conditions_must_be_non_empty(tmp_path):
    with pytest.raises(SuiteFormatError, match='conditions'):
        parse_suite(_write(tmp_path, "suite: none\nconditions: []\n"))


def test_bad_condition_name(tmp_path):
    text = MINIMAL.replace('name: only', 'name: "has space"')
    with pytest.raises(SuiteFormatError):
        parse_suite(_write(tmp_path, text))


# ==================== SuiteManager ====================

def test_manager_lists_and_resolves(tmp_path):
    _write(tmp_path, MINIMAL, 'b_suite.yaml')
    _write(tmp_path, MINIMAL.replace('tiny', 'other'), 'a_suite.yaml')
    (tmp_path / 'notes.txt').write_text('x', encoding='utf-8')
    manager = SuiteManager(str(tmp_path))

    assert manager.list_suites() == ['a_suite.yaml', 'b_suite.yaml']
    assert manager.load_suite('b_suite').name == 'tiny'
    assert manager.load_suite('a_suite.yaml').name == 'other'


def test_manager_caches_until_reload(tmp_path):
    path = _write(tmp_path, MINIMAL, 'cached.yaml')
    manager = SuiteManager(str(tmp_path))
    first = manager.load_suite('cached')
    assert manager.load_suite('cached') is first

    _write(tmp_path, MINIMAL.replace('tiny', 'renamed'), 'cached.yaml')
    assert manager.load_suite(path).name == 'tiny'
    assert manager.reload_suite('cached').name == 'renamed'
    manager.clear_cache()
    assert manager.load_suite('cached') is not first


def test_suite_info(tmp_path):
    _write(tmp_path, MINIMAL, 'good.yaml')
    _write(tmp_path, 'suite: broken\n', 'broken.yaml')
    manager = SuiteManager(str(tmp_path))

    good = manager.get_suite_info('good.yaml')
    assert good['exists'] and good['conditions'] == 1 and good['error'] is None
    broken = manager.get_suite_info('broken.yaml')
    assert broken['conditions'] == 0 and 'conditions' in broken['error']
    assert manager.get_suite_info('absent.yaml')['exists'] is False


def test_missing_suite_dir_lists_nothing(tmp_path):
    assert SuiteManager(str(tmp_path / 'nowhere')).list_suites() == []
