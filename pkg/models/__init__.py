"""
Data models for devices, netlists, circuits, analyses and experiments
"""
