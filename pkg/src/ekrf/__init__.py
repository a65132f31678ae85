"""ekrf: a laboratory for randomly grown r-uniform intersecting set families.

Grows intersecting families edge by edge (each new edge drawn uniformly from
the r-sets meeting every current edge), tracks the structural phase times
(first degree-3 vertex, first non-simple pair, degree-4 fixation), computes
the associated counting quantities exactly by inclusion-exclusion, and
compares empirical phase-time distributions against their limit laws.
"""

__version__ = "0.1.0"
