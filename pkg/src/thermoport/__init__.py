"""Port-thermodynamic systems on the homogeneous symplectic phase space."""

__version__ = "0.1.0"
