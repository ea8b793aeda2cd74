"""Numerical laboratory for the GL(3) hyper-Kloosterman Kuznetsov formula."""

__version__ = "0.1.0"
