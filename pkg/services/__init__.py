"""
服务模块

目录结构：
- potential/    势函数求值与单割检查
- equilibrium/  支撑求解与平衡测度
- sampler/      三对角模型、MALA 与多链调度
- oracle/       N <= 3 的精确期望
- observables/  观测量与环方程残差
- experiments/  实验注册表与各项验证
"""
