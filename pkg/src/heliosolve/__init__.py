"""Solar Green's function modelling and interior inversion."""

__version__ = "0.1.0"
