"""
Core Module

This module contains the probability models, samplers, optimizer and oracles.
"""
