from .ast import *  # noqa: F401,F403
from .parser import ParseError, parse, parse_formula, parse_program  # noqa: F401
from .printer import format_expr, format_model, format_program  # noqa: F401
