"""Exact moments of Rademacher sums and stability certificates for Khintchine inequalities."""

__version__ = "0.1.0"
