"""
Command router for the sumset toolkit CLI
"""

import logging

from .instance_commands import (
    GenCommandHandler,
    SolveCommandHandler,
    VerifyCommandHandler
)

from .structure_commands import (
    BsgCommandHandler,
    HashFamilyCommandHandler,
    OnlineCommandHandler,
    UniverseCommandHandler
)

from .sequence_commands import (
    HistCommandHandler,
    MinPlusCommandHandler
)

from .bench_command import BenchCommandHandler


class CommandRouter:
    """Routes subcommands to appropriate handlers"""

    def __init__(self, services, constants):
        """
        Initialize router with services and constants

        Args:
            services: Dict containing service instances
            constants: Dict containing constants
        """
        self.services = services
        self.constants = constants

        # Initialize handlers
        self.handlers = {
            'gen': GenCommandHandler(services, constants),
            'solve': SolveCommandHandler(services, constants),
            'verify': VerifyCommandHandler(services, constants),
            'bench': BenchCommandHandler(services, constants),

            # Structures
            'bsg': BsgCommandHandler(services, constants),
            'hash-family': HashFamilyCommandHandler(services, constants),
            'online': OnlineCommandHandler(services, constants),
            'universe': UniverseCommandHandler(services, constants),

            # Sequences and strings
            'hist': HistCommandHandler(services, constants),
            'minplus': MinPlusCommandHandler(services, constants),
        }

    def route(self, args):
        """
        Route a parsed command line to its handler

        Args:
            args: argparse namespace; args.command names the subcommand

        Returns:
            Exit code, or None if no handler found
        """
        handler = self.handlers.get(args.command)

        if handler:
            logging.info(f"Routing command {args.command} to {handler.__class__.__name__}")
            return handler.handle(args)

        return None
