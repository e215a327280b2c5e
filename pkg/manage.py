#!/usr/bin/env python3
"""
规则-事实网络实验管理工具
用于执行实验套件、重新汇总结果、生成和查看网络以及标注网络
"""

import argparse
import os
import sys
from typing import List, Optional

import numpy as np

from config import Config, configure_logging
from experiments import DEFAULT_CLASSIFICATION_THRESHOLD
from generators import GenerationError, TopologyKind, TopologySpec, build_network
from network import NetworkInputError, RunStatus, canonical_assignment, evaluate
from network_io import (
    AnnotationError,
    NetworkFormatError,
    export_annotations,
    export_dot,
    import_annotations,
    load_annotations,
    load_network,
    save_annotations,
    save_network,
)
from reporting import SUMMARY_COLUMNS, SUMMARY_TABLE, format_summary_table, report_records, run_suite, summary_row
from suite_manager import SuiteFormatError, SuiteNotFoundError, SuiteValidationError, suite_manager


def list_suites(args) -> int:
    """列出所有实验套件"""
    print("📝 可用的实验套件:")
    print("=" * 50)

    suites = suite_manager.list_suites()
    if not suites:
        print("❌ 没有找到实验套件")
        return 0

    for filename in suites:
        info = suite_manager.get_suite_info(filename)
        if info['error']:
            print(f"❌ {filename} ({info['error']})")
        else:
            print(f"📄 {filename} ({info['conditions']} 个实验条件)")
    return 0


def run(args) -> int:
    """执行实验套件"""
    try:
        suite = suite_manager.load_suite(args.suite)
    except (SuiteNotFoundError, SuiteFormatError, SuiteValidationError) as e:
        print(f"❌ 加载套件失败: {e}")
        return 1

    status = run_suite(suite, n_jobs=args.jobs, backend=args.backend, save_to_db=args.db or None)
    if status != 0:
        print(f"❌ 套件 {suite.name} 执行失败 (退出状态 {status})")
        return status

    with open(os.path.join(suite.output_dir, SUMMARY_TABLE), 'r', encoding='utf-8') as f:
        print(f.read())
    print(f"✅ 结果已写入 {suite.output_dir}")
    return 0


def report(args) -> int:
    """按阈值重新汇总迭代记录"""
    rows = []
    try:
        for path in args.records:
            name = os.path.splitext(os.path.basename(path))[0]
            rows.append(summary_row(name, report_records(path, args.threshold)))
    except (OSError, ValueError) as e:
        print(f"❌ 读取记录失败: {e}")
        return 1

    if args.csv:
        print(','.join(SUMMARY_COLUMNS))
        for row in rows:
            print(','.join(row))
    else:
        print(format_summary_table(rows), end='')
    return 0


def generate(args) -> int:
    """生成网络并写入网络文件"""
    spec = TopologySpec(
        kind=TopologyKind(args.kind),
        n_facts=args.facts,
        n_rules=args.rules,
        density_pct=args.density,
        depth=args.depth,
        interior_width=args.width,
        boundary_width=args.boundary_width,
    )
    try:
        network = build_network(spec, np.random.default_rng(args.seed))
        save_network(network, args.out)
    except (GenerationError, OSError) as e:
        print(f"❌ 生成失败: {e}")
        return 1
    print(f"✅ 已生成 {args.kind} 网络: {len(network.facts)} 个事实, {len(network.rules)} 条规则 -> {args.out}")
    return 0


def evaluate_network(args) -> int:
    """以标准赋值求值网络"""
    try:
        network = load_network(args.network)
        outcome = evaluate(network, canonical_assignment(args.source), args.target)
    except (OSError, NetworkFormatError, NetworkInputError) as e:
        print(f"❌ 求值失败: {e}")
        return 1

    marker = "✅" if outcome.status == RunStatus.COMPLETED else "⚠️"
    print(f"{marker} 状态: {outcome.status.value}, 轮数: {outcome.passes}, "
          f"目标事实 {args.target} = {outcome.target_value:.6f}")

    if args.out:
        for fact, value in zip(network.facts, outcome.fact_values):
            fact.value = value
        try:
            save_network(network, args.out)
        except OSError as e:
            print(f"❌ 保存失败: {e}")
            return 1
        print(f"📄 求值后的网络已写入 {args.out}")
    return 0 if outcome.status != RunStatus.NON_CONVERGING else 3


def export_dot_file(args) -> int:
    """导出 DOT 文件"""
    try:
        export_dot(load_network(args.network), args.out)
    except (OSError, NetworkFormatError) as e:
        print(f"❌ 导出失败: {e}")
        return 1
    print(f"✅ DOT 已导出: {args.out}")
    return 0


def annotate_export(args) -> int:
    """导出空白标注文件"""
    try:
        network = load_network(args.network)
        save_annotations(export_annotations(network, os.path.basename(args.network)), args.out)
    except (OSError, NetworkFormatError) as e:
        print(f"❌ 导出标注失败: {e}")
        return 1
    print(f"✅ 标注文件已导出: {args.out}")
    return 0


def annotate_apply(args) -> int:
    """把标注应用到网络"""
    try:
        network = load_network(args.network)
        annotated = import_annotations(network, load_annotations(args.annotations))
        save_network(annotated, args.out)
    except (OSError, NetworkFormatError, AnnotationError) as e:
        print(f"❌ 应用标注失败: {e}")
        return 1
    removed = len(network.rules) - len(annotated.rules)
    print(f"✅ 标注已应用: 删除 {removed} 条规则 -> {args.out}")
    return 0


def db_info(args) -> int:
    """显示结果数据库配置"""
    from database import print_config_info
    print_config_info()
    return 0


def db_export(args) -> int:
    """把数据库中的实验结果导出为JSON"""
    from database import get_db
    try:
        path = get_db().export_to_json(args.out_dir, args.suite)
    except Exception as e:
        print(f"❌ 导出失败: {e}")
        return 1
    print(f"✅ 结果已导出: {path}")
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog='manage.py', description='规则-事实网络实验管理工具')
    parser.add_argument('--log-level', default=None, help='日志级别 (默认 RULEFACT_LOG_LEVEL)')
    commands = parser.add_subparsers(dest='command', required=True)

    p = commands.add_parser('list', help='列出实验套件')
    p.set_defaults(handler=list_suites)

    p = commands.add_parser('run', help='执行实验套件')
    p.add_argument('suite', help='套件名称或文件路径')
    p.add_argument('--jobs', type=int, default=None, help=f'并行进程数 (默认 {Config.N_JOBS})')
    p.add_argument('--backend', default=None, help=f'joblib 后端 (默认 {Config.PARALLEL_BACKEND})')
    p.add_argument('--db', action='store_true', help='同时保存到结果数据库')
    p.set_defaults(handler=run)

    p = commands.add_parser('report', help='重新汇总迭代记录')
    p.add_argument('records', nargs='+', help='records/<condition>.csv')
    p.add_argument('--threshold', type=float, default=DEFAULT_CLASSIFICATION_THRESHOLD, help='高/低误差阈值')
    p.add_argument('--csv', action='store_true', help='输出CSV而不是对齐表')
    p.set_defaults(handler=report)

    p = commands.add_parser('generate', help='生成网络文件')
    p.add_argument('kind', choices=[k.value for k in TopologyKind])
    p.add_argument('--facts', type=int)
    p.add_argument('--rules', type=int)
    p.add_argument('--density', type=int)
    p.add_argument('--depth', type=int)
    p.add_argument('--width', type=int)
    p.add_argument('--boundary-width', type=int, default=5)
    p.add_argument('--seed', type=int, default=0)
    p.add_argument('--out', required=True)
    p.set_defaults(handler=generate)

    p = commands.add_parser('evaluate', help='以标准赋值求值网络')
    p.add_argument('network')
    p.add_argument('--source', type=int, required=True)
    p.add_argument('--target', type=int, required=True)
    p.add_argument('--out', help='写出带求值结果的网络文件')
    p.set_defaults(handler=evaluate_network)

    p = commands.add_parser('export-dot', help='导出 GraphViz DOT 文件')
    p.add_argument('network')
    p.add_argument('out')
    p.set_defaults(handler=export_dot_file)

    annotate = commands.add_parser('annotate', help='标注网络').add_subparsers(dest='action', required=True)
    p = annotate.add_parser('export', help='导出空白标注文件')
    p.add_argument('network')
    p.add_argument('out')
    p.set_defaults(handler=annotate_export)
    p = annotate.add_parser('apply', help='应用标注文件')
    p.add_argument('network')
    p.add_argument('annotations')
    p.add_argument('out')
    p.set_defaults(handler=annotate_apply)

    db = commands.add_parser('db', help='结果数据库').add_subparsers(dest='action', required=True)
    p = db.add_parser('info', help='显示数据库配置')
    p.set_defaults(handler=db_info)
    p = db.add_parser('export', help='导出实验结果为JSON')
    p.add_argument('--suite', default=None, help='只导出指定套件')
    p.add_argument('--out-dir', default=Config.DATA_DIR, help='输出目录')
    p.set_defaults(handler=db_export)

    return parser


def main(argv: Optional[List[str]] = None) -> int:
    """主函数"""
    args = build_parser().parse_args(argv)
    configure_logging(args.log_level)
    return args.handler(args)


if __name__ == "__main__":
    sys.exit(main())
