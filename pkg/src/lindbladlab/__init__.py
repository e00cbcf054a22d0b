"""Numerical checks of the Born-Markov reduction of a system coupled to a
zero-temperature bosonic bath, from the exact composite dynamics down to the
Lindblad equation."""

__version__ = "0.1.0"
