"""
Test package for the HR-Cache simulator.
"""
