"""Test suite for the fractional critical lab."""
