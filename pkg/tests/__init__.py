"""
MMC - Tests
"""
