"""Lubrication test fields, gap drag, and contact dynamics for a sphere
settling onto a plane wall under Navier slip conditions."""

__version__ = "0.1.0"
