"""Configuration parsing and experiment orchestration."""
