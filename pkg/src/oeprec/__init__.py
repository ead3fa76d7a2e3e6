"""Hierarchical recognition of home exercise programme activities from a waist IMU."""

__version__ = "0.1.0"
