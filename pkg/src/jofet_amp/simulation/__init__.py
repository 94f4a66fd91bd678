"""Semiclassical simulator of the pumped Kerr cavity and its measurement chain."""
