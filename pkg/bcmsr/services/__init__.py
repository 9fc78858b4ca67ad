# Services package for bounds, examples and key simulation
