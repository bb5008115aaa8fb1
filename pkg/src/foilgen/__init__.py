"""foilgen: airfoil inverse design with euclidean and hyperspherical CVAEs."""

__version__ = "0.1.0"
