#!/usr/bin/env python3
# -*- coding: utf-8 -*-
"""
网络文件读写模块
网络文件（带格式标记的JSON）、GraphViz DOT 导出以及事实/规则标注的导出与应用
"""

import hashlib
import json
import logging
import os
from dataclasses import dataclass, field, replace
from enum import Enum
from typing import Any, Dict, List, Mapping, Optional

from network import Fact, RuleFactNetwork, validate

logger = logging.getLogger('rulefact')

FORMAT_TAG = 'rulefact-network/1'
ANNOTATION_FORMAT_TAG = 'rulefact-annotations/1'


class NetworkFormatError(ValueError):
    """网络文件格式错误或网络不合法"""


class AnnotationError(ValueError):
    """标注文件无法应用到网络"""


# ==================== 网络文件 ====================

def network_to_document(network: RuleFactNetwork) -> Dict[str, Any]:
    document = {'format': FORMAT_TAG}
    document.update(network.to_dict())
    return document


def network_from_document(document: Any, where: str = '<document>') -> RuleFactNetwork:
    """从文档创建网络并校验"""
    if not isinstance(document, dict):
        raise NetworkFormatError(f"{where}: 网络文件必须是JSON对象")
    tag = document.get('format')
    if tag != FORMAT_TAG:
        raise NetworkFormatError(f"{where}: 不支持的格式标记 {tag!r}（需要 {FORMAT_TAG}）")
    try:
        network = RuleFactNetwork.from_dict(document)
    except (KeyError, TypeError, ValueError) as e:
        raise NetworkFormatError(f"{where}: 网络字段缺失或类型错误: {e}")

    report = validate(network)
    if not report.is_valid:
        raise NetworkFormatError(f"{where}: 网络不合法: {report.summary()}")
    return network


def save_network(network: RuleFactNetwork, path: str):
    """保存网络文件"""
    directory = os.path.dirname(os.path.abspath(path))
    os.makedirs(directory, exist_ok=True)
    with open(path, 'w', encoding='utf-8') as f:
        json.dump(network_to_document(network), f, ensure_ascii=False, indent=2)
        f.write('\n')
    logger.info(f"网络已保存: {path} ({len(network.facts)} 个事实, {len(network.rules)} 条规则)")


def load_network(path: str) -> RuleFactNetwork:
    """
    加载网络文件

    Args:
        path: 网络文件路径

    Returns:
        校验通过的网络
    """
    try:
        with open(path, 'r', encoding='utf-8') as f:
            document = json.load(f)
    except json.JSONDecodeError as e:
        raise NetworkFormatError(f"{path}: 不是合法的JSON: {e}")
    return network_from_document(document, path)


# ==================== DOT 导出 ====================

def _escape(text: str) -> str:
    return text.replace('\\', '\\\\').replace('"', '\\"')


def _fact_label(fact: Fact) -> str:
    parts = [f"f{fact.id}"]
    if fact.label:
        parts.append(_escape(fact.label))
    parts.append(f"{fact.value:.3f}")
    return '\\n'.join(parts)


def render_dot(network: RuleFactNetwork, name: str = 'rulefact') -> str:
    """
    把网络渲染为 graphviz 代码

    事实是椭圆节点 f<id>，规则是方框节点 r<id>，边为 输入→规则→输出；
    挂起的规则画虚线。分层网络的同层事实放在同一 rank。

    保存为 network.dot 后可以运行：

    $ dot -Tpng network.dot > network.png
    """
    lines = [f'digraph "{_escape(name)}" {{', 'rankdir=LR;']
    append = lines.append

    for fact in network.facts:
        append(f'f{fact.id} [shape=ellipse label="{_fact_label(fact)}"];')

    for rule in sorted(network.rules, key=lambda r: r.id):
        label = f"r{rule.id}"
        if rule.label:
            label += '\\n' + _escape(rule.label)
        label += f"\\n({rule.w1:.3f}, {rule.w2:.3f})"
        style = ' style=dashed' if rule.suspended else ''
        append(f'r{rule.id} [shape=box label="{label}"{style}];')

    for rule in sorted(network.rules, key=lambda r: r.id):
        style = ' [style=dashed]' if rule.suspended else ''
        append(f'f{rule.input1} -> r{rule.id}{style};')
        append(f'f{rule.input2} -> r{rule.id}{style};')
        append(f'r{rule.id} -> f{rule.output}{style};')

    if network.is_layered():
        for layer in sorted({f.layer for f in network.facts}):
            members = ' '.join(f'f{i};' for i in network.layer_members(layer))
            append(f'{{rank=same; {members}}}')

    append('}')
    return '\n'.join(lines) + '\n'


def export_dot(network: RuleFactNetwork, path: str):
    """写出 DOT 文件"""
    report = validate(network)
    if not report.is_valid:
        raise NetworkFormatError(f"网络不合法，无法导出: {report.summary()}")
    with open(path, 'w', encoding='utf-8') as f:
        f.write(render_dot(network))
    logger.info(f"DOT 已导出: {path}")


# ==================== 标注 ====================

class Disposition(Enum):
    FUNCTIONAL = 'functional'
    MEANINGFUL = 'meaningful'
    REMOVE = 'remove'


@dataclass
class AnnotationEntry:
    id: int
    label: Optional[str] = None
    disposition: Optional[Disposition] = None

    def to_dict(self) -> Dict[str, Any]:
        """转换为字典格式"""
        return {
            'id': self.id,
            'label': self.label,
            'disposition': self.disposition.value if self.disposition else None,
        }

    @classmethod
    def from_dict(cls, data: Mapping[str, Any]) -> 'AnnotationEntry':
        """从字典创建实例"""
        raw = data.get('disposition')
        try:
            disposition = Disposition(str(raw).lower()) if raw else None
        except ValueError:
            choices = ', '.join(d.value for d in Disposition)
            raise AnnotationError(f"未知的处置 {raw!r}（可选: {choices}）")
        return cls(id=int(data['id']), label=data.get('label') or None, disposition=disposition)


@dataclass
class AnnotationFile:
    """网络引用 + 每个事实和规则的标注"""
    network: str = ''
    fingerprint: str = ''
    facts: List[AnnotationEntry] = field(default_factory=list)
    rules: List[AnnotationEntry] = field(default_factory=list)

    def to_dict(self) -> Dict[str, Any]:
        """转换为字典格式"""
        return {
            'format': ANNOTATION_FORMAT_TAG,
            'network': self.network,
            'fingerprint': self.fingerprint,
            'facts': [e.to_dict() for e in self.facts],
            'rules': [e.to_dict() for e in self.rules],
        }

    @classmethod
    def from_dict(cls, data: Mapping[str, Any]) -> 'AnnotationFile':
        """从字典创建实例"""
        if data.get('format') != ANNOTATION_FORMAT_TAG:
            raise AnnotationError(f"不支持的标注格式标记 {data.get('format')!r}")
        try:
            return cls(
                network=data.get('network', ''),
                fingerprint=data.get('fingerprint', ''),
                facts=[AnnotationEntry.from_dict(e) for e in data.get('facts', [])],
                rules=[AnnotationEntry.from_dict(e) for e in data.get('rules', [])],
            )
        except (KeyError, TypeError, ValueError) as e:
            if isinstance(e, AnnotationError):
                raise
            raise AnnotationError(f"标注条目缺失字段或类型错误: {e}")


def structure_fingerprint(network: RuleFactNetwork) -> str:
    """只依赖事实ID和规则连接关系（不含权重和标签）的指纹"""
    structure = {
        'facts': [f.id for f in network.facts],
        'rules': sorted([r.id, r.input1, r.input2, r.output] for r in network.rules),
    }
    encoded = json.dumps(structure, separators=(',', ':')).encode('utf-8')
    return hashlib.sha256(encoded).hexdigest()


def export_annotations(network: RuleFactNetwork, network_ref: str = '') -> AnnotationFile:
    """列出全部事实和规则，处置留空，标签沿用网络中的标签"""
    return AnnotationFile(
        network=network_ref,
        fingerprint=structure_fingerprint(network),
        facts=[AnnotationEntry(id=f.id, label=f.label) for f in network.facts],
        rules=[AnnotationEntry(id=r.id, label=r.label) for r in sorted(network.rules, key=lambda r: r.id)],
    )


def save_annotations(annotations: AnnotationFile, path: str):
    with open(path, 'w', encoding='utf-8') as f:
        json.dump(annotations.to_dict(), f, ensure_ascii=False, indent=2)
        f.write('\n')


def load_annotations(path: str) -> AnnotationFile:
    try:
        with open(path, 'r', encoding='utf-8') as f:
            return AnnotationFile.from_dict(json.load(f))
    except json.JSONDecodeError as e:
        raise AnnotationError(f"{path}: 不是合法的JSON: {e}")


def import_annotations(network: RuleFactNetwork, annotations: AnnotationFile) -> RuleFactNetwork:
    """
    把标注应用到网络副本

    先应用标签，再删除处置为 remove 的规则，最后删除处置为 remove 的事实
    （事实仍被规则引用时拒绝），事实ID重新压缩为连续编号。

    Args:
        network: 原网络（不会被修改）
        annotations: 标注文件

    Returns:
        应用标注并重新校验后的网络
    """
    fact_ids = {f.id for f in network.facts}
    rule_ids = {r.id for r in network.rules}
    unknown_facts = sorted(e.id for e in annotations.facts if e.id not in fact_ids)
    unknown_rules = sorted(e.id for e in annotations.rules if e.id not in rule_ids)
    if unknown_facts or unknown_rules:
        raise AnnotationError(f"标注引用了不存在的事实 {unknown_facts} 或规则 {unknown_rules}")

    if annotations.fingerprint and annotations.fingerprint != structure_fingerprint(network):
        logger.warning(f"标注文件的结构指纹与网络不一致 ({annotations.network or '未命名网络'})")

    result = network.copy()
    fact_labels = {e.id: e.label for e in annotations.facts}
    rule_labels = {e.id: e.label for e in annotations.rules}
    result.facts = [replace(f, label=fact_labels.get(f.id, f.label)) for f in result.facts]
    result.rules = [replace(r, label=rule_labels.get(r.id, r.label)) for r in result.rules]

    result.remove_rules(e.id for e in annotations.rules if e.disposition == Disposition.REMOVE)

    doomed_facts = {e.id for e in annotations.facts if e.disposition == Disposition.REMOVE}
    if doomed_facts:
        referenced = sorted(
            fact_id for rule in result.rules
            for fact_id in (rule.input1, rule.input2, rule.output)
            if fact_id in doomed_facts
        )
        if referenced:
            raise AnnotationError(f"事实 {sorted(set(referenced))} 仍被规则引用，不能删除")
        kept = [f for f in result.facts if f.id not in doomed_facts]
        remap = {f.id: new_id for new_id, f in enumerate(kept)}
        result.facts = [replace(f, id=remap[f.id]) for f in kept]
        result.rules = [
            replace(r, input1=remap[r.input1], input2=remap[r.input2], output=remap[r.output])
            for r in result.rules
        ]

    report = validate(result)
    if not report.is_valid:
        raise AnnotationError(f"应用标注后网络不合法: {report.summary()}")
    return result
