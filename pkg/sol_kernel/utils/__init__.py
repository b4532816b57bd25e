"""Logging, settings and JSON conversion helpers"""
