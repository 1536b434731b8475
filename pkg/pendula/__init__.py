"""
Coupled pendula network workbench
"""
__version__ = "0.1.0"
