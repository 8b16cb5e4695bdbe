"""Enhanced dissipation by stirring: solvers, flow analysis, experiments."""

__version__ = "0.1.0"
