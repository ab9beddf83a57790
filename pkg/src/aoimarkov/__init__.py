"""Age-of-Information moments for random access with Markov transmission chains."""

__version__ = "0.1.0"
