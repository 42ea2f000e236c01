""" Hitchin invariants of circle vector fields, SL(n,R)-actions and lattice gluing graphs """

__version__ = "0.1.0"
