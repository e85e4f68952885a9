# polyvocab/templates.py
"""
Text reports.

Jinja2 templates under ``polyvocab/report_templates/`` render the text form
of every subcommand; JSON output goes through :func:`to_json` instead.
"""

import json
from typing import Any, Optional

from jinja2 import Environment, PackageLoader, StrictUndefined

# Globals
_env: Optional[Environment] = None


def get_env() -> Environment:
    """Get or create the report environment."""
    global _env
    if _env is None:
        _env = Environment(
            loader=PackageLoader("polyvocab", "report_templates"),
            undefined=StrictUndefined,
            trim_blocks=True,
            lstrip_blocks=True,
            keep_trailing_newline=True,
        )
        _env.filters["row"] = lambda values: " ".join(f"{v:>3}" for v in values)
    return _env


def render_report(name: str, **context: Any) -> str:
    """Render ``report_templates/<name>.txt.j2``."""
    return get_env().get_template(f"{name}.txt.j2").render(**context)


def to_json(data: Any) -> str:
    return json.dumps(data, sort_keys=True, indent=2) + "\n"
