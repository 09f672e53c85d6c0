"""Command-line interface for kornlab."""
