from .ast import *  # noqa: F401,F403
from .parse import (parse_pattern, parse_pattern_doc, PatternSyntaxError,
                    UnknownNodeKind, BadQuantifierParam,
                    MissingPathUpperBound)  # noqa: F401
from .serialize import serialize_pattern, pattern_to_json  # noqa: F401
