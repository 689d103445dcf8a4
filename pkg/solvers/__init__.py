"""Block-sparse multi-task solvers (MxNE / irMxNE) and their shared data model."""

__version__ = "0.1.0"
