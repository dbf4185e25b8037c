"""Multi-domain satellite network simulator with hierarchical actor-critic mission scheduling."""

__version__ = "0.1.0"
