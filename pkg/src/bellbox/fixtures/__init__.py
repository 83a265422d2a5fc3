"""Shipped reference documents, usable from tests and the command line.

Each fixture is a JSON document in the package's own format, written by
the package's own emitter, so parsing and re-emitting any of them is a
byte-level identity.
"""

from importlib import resources

from ..errors import ValidationError


def fixture_names() -> list[str]:
    base = resources.files(__name__)
    return sorted(
        entry.name[:-5]
        for entry in base.iterdir()
        if entry.name.endswith(".json")
    )


def fixture_path(name: str):
    """Path-like handle on a shipped document."""
    target = resources.files(__name__) / f"{name}.json"
    if not target.is_file():
        known = ", ".join(fixture_names())
        raise ValidationError(f"unknown fixture {name!r}; shipped fixtures: {known}")
    return target
