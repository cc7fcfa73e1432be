"""Foreground-aware dataset distillation via dynamic patch selection."""

__version__ = "0.1.0"
