#!/usr/bin/env python3
# -*- coding: utf-8 -*-
"""
实验结果数据库模型定义
"""

import json
from datetime import datetime

from sqlalchemy import BigInteger, Column, DateTime, Float, ForeignKey, Integer, String, Text
from sqlalchemy.orm import declarative_base, relationship

Base = declarative_base()


class ConditionRun(Base):
    """实验条件统计表"""
    __tablename__ = 'condition_runs'

    id = Column(Integer, primary_key=True, autoincrement=True)
    suite = Column(String(255), nullable=False, comment='套件名称')
    condition = Column(String(255), nullable=False, comment='实验条件名称')
    config = Column(Text, comment='实验条件参数(JSON)')
    iterations = Column(Integer, nullable=False, default=0, comment='迭代次数')
    mean = Column(Float, comment='平均误差')
    median = Column(Float, comment='误差中位数')
    av_high = Column(Float, comment='高误差组平均值')
    av_low = Column(Float, comment='低误差组平均值')
    ct_high = Column(Integer, default=0, comment='高误差网络数')
    ct_low = Column(Integer, default=0, comment='低误差网络数')
    completions = Column(Integer, default=0, comment='完成数')
    exclusions = Column(Text, comment='各排除状态计数(JSON)')
    created_at = Column(DateTime, default=datetime.utcnow, comment='创建时间')

    records = relationship('IterationRecord', back_populates='condition_run',
                           cascade='all, delete-orphan', order_by='IterationRecord.position')

    def to_dict(self):
        """转换为字典格式"""
        return {
            'id': self.id,
            'suite': self.suite,
            'condition': self.condition,
            'config': json.loads(self.config) if self.config else {},
            'iterations': self.iterations,
            'mean': self.mean,
            'median': self.median,
            'av_high': self.av_high,
            'av_low': self.av_low,
            'ct_high': self.ct_high,
            'ct_low': self.ct_low,
            'completions': self.completions,
            'exclusions': json.loads(self.exclusions) if self.exclusions else {},
            'createdAt': self.created_at.isoformat() if self.created_at else None,
        }


class IterationRecord(Base):
    """单次迭代记录表"""
    __tablename__ = 'iteration_records'

    id = Column(Integer, primary_key=True, autoincrement=True)
    condition_run_id = Column(Integer, ForeignKey('condition_runs.id'), nullable=False)
    position = Column(Integer, nullable=False, comment='迭代序号')
    seed = Column(BigInteger, nullable=False, comment='迭代种子')
    status = Column(String(50), nullable=False, comment='迭代状态')
    error = Column(Float, comment='训练后误差（仅完成的迭代）')
    initial_error = Column(Float, comment='训练前误差')
    rules_after_prune = Column(Integer, default=0, comment='剪枝后规则数')
    source = Column(Integer, comment='源事实ID')
    target = Column(Integer, comment='目标事实ID')

    condition_run = relationship('ConditionRun', back_populates='records')

    def to_dict(self):
        """转换为字典格式"""
        return {
            'seed': self.seed,
            'status': self.status,
            'error': self.error,
            'initial_error': self.initial_error,
            'rules_after_prune': self.rules_after_prune,
            'source': self.source,
            'target': self.target,
        }

