"""Monte Carlo laboratory for limit theorems of functionals of heavy-tailed linear processes."""

__version__ = "0.1.0"
