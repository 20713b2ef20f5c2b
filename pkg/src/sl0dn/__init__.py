"""Smoothed-l0 sparse recovery for noisy underdetermined linear systems."""
