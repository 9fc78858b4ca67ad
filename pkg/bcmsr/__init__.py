# This file makes the bcmsr directory a Python package
__version__ = "1.0.0"
