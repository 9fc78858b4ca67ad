from . import fme, region, simulate, sweep, verify


COMMANDS = (region, sweep, fme, simulate, verify)

__all__ = ["COMMANDS", "fme", "region", "simulate", "sweep", "verify"]
