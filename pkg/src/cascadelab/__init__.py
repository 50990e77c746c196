"""Numerical laboratory for quasi-resonant energy cascades of the cubic
NLS equation on rectangular tori with irrational aspect ratio.

The package implements the constructive pipeline end to end at desk
scale: continued-fraction frequency selection, placement of prolific
generation sets on the scaled lattice, quasi-resonance enumeration, a
weak quartic normal form realized as a generator flow, the finite
cascade toy model, and Galerkin shadowing experiments, together with
the property checks that tie the stages to each other.
"""

__version__ = "0.1.0"
