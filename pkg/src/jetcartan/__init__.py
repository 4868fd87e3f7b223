"""jetcartan: exact moving-frame and Cartan-test computations on jet bundles."""

__version__ = "0.1.0"
