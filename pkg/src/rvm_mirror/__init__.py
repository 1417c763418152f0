"""Relativistic 1.5D Vlasov-Maxwell in a box with magnetic wall confinement.

Particles are kept off the walls of ``(0, 1)`` by a strong external field
concentrated in layers of width ``1/N``.  The package integrates single
trajectories through those layers, runs particle-in-cell simulations of the
confined and the specular-wall problems, and measures how the former
approaches the latter as ``N`` grows.
"""

__version__ = "0.1.0"
