"""Self-sensing fiber-composite fracture simulation toolkit.

Homogenizes the elastic, fracture, and electrical properties of
CNT-filled polymers and drives coupled deformation / electric /
damage field simulations of structural specimens built from them.
"""

from .materials import CompositeSpec, EffectiveProperties, derive_properties

__all__ = ["CompositeSpec", "EffectiveProperties", "derive_properties"]

__version__ = "0.1.0"
