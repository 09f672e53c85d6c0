"""kornlab - a numerical lab for weighted Korn and Poincaré inequalities."""

__version__ = "0.1.0"
