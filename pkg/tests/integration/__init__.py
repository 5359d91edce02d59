"""
MMC - Integration tests
"""
