"""Covariant localization measures for quantum events.

Construct positive-operator-valued measures on Minkowski spacetime from
isometric kernel families, evaluate the localization density of a state,
integrate it over regions, take moments, and run a verification battery
for the structural properties (normalization, covariance, positivity,
non-projectivity, conjugation equivalence).
"""

__version__ = "0.1.0"
