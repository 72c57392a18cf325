# coding=utf-8
"""
haptic_ring - 多模态纹理渲染 / Action-based multimodal texture rendering

把手指-表面交互记录 (压力, 皮肤温度, 热流, 表面图像) 转换为
触觉指环的三路执行器指令, 并提供闭环装置仿真与用户实验统计。
"""
__version__ = '1.0.0'
