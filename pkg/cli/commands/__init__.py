# =============================================================================
# CLI COMMANDS PACKAGE
# =============================================================================
"""
Commands package - maps each command to its runner.
"""

from ..schemas import Command
from . import check, fixture, frame, pairing, spectrum, symbol, varorder

COMMANDS = {
    Command.SPECTRUM: spectrum.run,
    Command.FRAME: frame.run,
    Command.PAIRING: pairing.run,
    Command.VARORDER: varorder.run,
    Command.SYMBOL: symbol.run,
    Command.FIXTURE: fixture.run,
    Command.CHECK: check.run,
}

__all__ = ["COMMANDS"]
