# Metropolis-Hastings contraction toolkit

__version__ = "0.1.0"
