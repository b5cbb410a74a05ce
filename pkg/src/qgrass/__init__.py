"""Integral 2-planes in Q^4, their associated sphere points and CM shapes."""
from .forms import BinaryForm, CMPoint, class_group, compose, cm_point, reduce_gl2, reduce_sl2
from .klein import KleinPair, inverse_klein, klein_pair
from .planes import (RationalPlane, discriminant, enumerate_planes, enumerate_sphere,
                     gram_form, orthocomplement, plane_from_span)
from .quat import PureVec3, Quaternion

__all__ = ["BinaryForm", "CMPoint", "KleinPair", "PureVec3", "Quaternion", "RationalPlane",
           "class_group", "cm_point", "compose", "discriminant", "enumerate_planes",
           "enumerate_sphere", "gram_form", "inverse_klein", "klein_pair", "orthocomplement",
           "plane_from_span", "reduce_gl2", "reduce_sl2"]
__version__ = "0.1.0"
