# coding=utf-8
"""
Tests for haptic-ring package.
"""
