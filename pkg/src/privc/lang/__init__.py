from . import ast
from .analysis import TypeEnv, has_public_side_effects, is_private, label_of
from .parser import parse
from .pretty import pretty

__all__ = ["ast", "parse", "pretty", "label_of", "is_private", "has_public_side_effects", "TypeEnv"]
