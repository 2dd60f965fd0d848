"""Numerical laboratory for semi-flat Calabi-Yau metrics on model elliptic fibrations.

Subpackages
-----------
sl2z          exact SL(2,Z) arithmetic and Kodaira-type classification
fiber_models  registry of model data and closed-form period evaluators
semiflat      pointwise semi-flat metric assembly and structure checks
curvature     Chern curvature, its norm, and asymptotic-constant comparisons
asymptotics   distances, volumes, cone angles, injectivity proxies, ALH decay
ma_lab        compact-torus complex Monge-Ampere solver and Sobolev probe
cli           command-line front end
"""

__version__ = "0.1.0"
