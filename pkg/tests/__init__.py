"""
Test suite for LateralGuard.
"""
