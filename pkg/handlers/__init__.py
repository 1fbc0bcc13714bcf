"""
Handlers module for the sumset toolkit CLI
"""

from .command_router import CommandRouter

__all__ = ['CommandRouter']
