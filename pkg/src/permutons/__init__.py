"""Samplers and scaling-exponent computations for separable permutations
and cographs built from signed trees and signed excursions."""

__version__ = "0.1.0"
