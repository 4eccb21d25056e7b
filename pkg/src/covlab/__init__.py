"""covlab: numerical verification of covariance identities and inequalities
for product probability measures."""

__version__ = "0.1.0"
