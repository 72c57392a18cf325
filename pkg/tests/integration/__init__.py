# coding=utf-8
"""
Integration tests for haptic-ring package.
"""
