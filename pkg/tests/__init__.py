"""Unit tests for eightport-homodyne."""
