"""Two-dimensional Coulomb gas toolkit: equilibrium measures, Metropolis
sampling, exact determinantal quantities at beta = 1, and localization
diagnostics near the droplet boundary."""

__version__ = "0.1.0"
