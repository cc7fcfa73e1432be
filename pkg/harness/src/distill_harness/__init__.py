"""Desk-scale training and evaluation harness for distilled datasets."""

__version__ = "0.1.0"
