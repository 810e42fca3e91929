"""皮肤电(EDA)情绪识别: cvxEDA 分解 + RTCAN-1D 注意力网络"""

__version__ = "0.1.0"
