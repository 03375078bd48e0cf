"""
Unit tests for the graph-of-groups toolkit
"""
