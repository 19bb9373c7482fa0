"""Numerics for Loewner chains with a force point and their rho-Loewner energy."""

__version__ = "0.1.0"
