"""Tests for Oscapify."""
