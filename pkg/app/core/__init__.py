"""
Core application components

This module contains core application components including configuration,
logging and exception handling.
"""
