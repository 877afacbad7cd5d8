from .engine import evaluate, match_skeleton, ValidationFailed, DEFAULT_NOW  # noqa: F401
from .matcher import Caps, ResourceLimit, UnsupportedFeature  # noqa: F401
from .plan import compile_pattern  # noqa: F401
