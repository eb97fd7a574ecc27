"""Utility functions for numerics, validation, and file operations."""
