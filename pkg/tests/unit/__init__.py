# coding=utf-8
"""
Unit tests for haptic-ring package.
"""
