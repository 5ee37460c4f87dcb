# This file makes src a Python package
"""NC近端平均工具包：Moreau 包络、近端平均、正则性检查与极小点路径"""

__version__ = "1.0.0"
