from . import simulate, sweep, hillclimb_study, lrt, snapshot, select

COMMANDS = [simulate, sweep, hillclimb_study, lrt, snapshot, select]

__all__ = ['COMMANDS']
