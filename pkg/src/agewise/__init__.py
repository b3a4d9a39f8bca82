"""Recycled-IC detection by side-channel delay testing on simulated silicon."""

__version__ = "0.1.0"
