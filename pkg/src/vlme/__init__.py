"""Ensemble fusion and evaluation kit for vision-language classifier outputs."""

__version__ = "0.1.0"
