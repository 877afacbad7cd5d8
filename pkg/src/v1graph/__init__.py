"""V1 property-graph pattern engine.

Load a schema and a property graph, parse and validate patterns expressed
in the JSON pattern syntax, evaluate them, and collect the union of
assignments with calculated properties.
"""

from .graph import PropertyGraph, load_graph, adjacent  # noqa: F401
from .pattern import parse_pattern, serialize_pattern  # noqa: F401
from .results import ResultGraph, serialize_results  # noqa: F401
from .schema import Schema, parse_schema, serialize_schema  # noqa: F401
from .validator import validate, analyze, Diagnostic  # noqa: F401
from .evaluator import evaluate, Caps, ResourceLimit  # noqa: F401

__version__ = "0.1.0"
