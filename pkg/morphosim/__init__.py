"""Desk-scale simulation toolkit for nonlinear actuation and adaptive control"""

__version__ = "1.0.0"
