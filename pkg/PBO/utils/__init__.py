"""
Utilities Module

This module contains logging, record and wire-protocol helpers.
"""
