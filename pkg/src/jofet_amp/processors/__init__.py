"""Readers and writers for Touchstone and CSV data files."""
