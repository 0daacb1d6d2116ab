"""Enthalpy-balance climate model and ventilation control for pig housing."""

__version__ = "0.1.0"
