__version__ = "0.1.0.dev0"
__author__ = "ParkOpt developers"
__email__ = ""

from parkopt.app import ParkOpt

__all__ = ["__version__", "ParkOpt"]
