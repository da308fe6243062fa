"""Model-driven web workflow system.

Textual class, activity, page and application models are parsed, linked and
executed as a web information system: activities run as resumable workflow
instances, pages render as form descriptors over HTTP, and the class model
doubles as a persistence schema with generated CRUD endpoints.
"""

__version__ = "0.1.0"

from .ast import Diagnostic, Loc  # noqa: F401
from .parser import (  # noqa: F401
    parse_activity,
    parse_app,
    parse_class_model,
    parse_page,
    parse_script_block,
)
from .printer import pretty_print  # noqa: F401
