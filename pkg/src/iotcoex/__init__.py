"""Coexistence of grant-free IoT networks in multi-apartment buildings."""

__version__ = "0.1.0"
