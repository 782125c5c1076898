"""
Acoustic Shock Lab - 声学几何激波形成数值实验室
二维正压可压缩 Euler 方程激波形成的数值实验与诊断
"""

__version__ = "0.1.0"
