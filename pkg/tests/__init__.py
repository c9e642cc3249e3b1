"""Tests for statute-search."""
