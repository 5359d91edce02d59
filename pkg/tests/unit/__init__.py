"""
MMC - Unit tests
"""
