"""数据处理模块."""

"""
src/data/
├── __init__.py
├── models.py              # 数据模型定义
├── presets.py             # 预置 IFS 目录
├── ifs_io.py              # IFS 与 Möbius 映射读写
├── alpha_parser.py        # α 输入解析
└── report_generator.py    # 报告生成
"""
