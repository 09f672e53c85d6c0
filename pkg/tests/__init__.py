"""Tests for kornlab."""
