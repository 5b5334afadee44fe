"""Pilot-wave hydrodynamics simulator and Bohmian reference integrator."""

__version__ = "0.1.0"
