"""Numerical laboratory for the extrinsic geometry of immersed surfaces
in even-codimension Euclidean space: second fundamental form and frame
machinery, normal-bundle complex structures and holonomy, special
variations and the second-variation spectrum."""

__version__ = "0.1.0"
