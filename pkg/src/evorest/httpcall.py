"""Concrete HTTP call values and resource-location resolution.

A rendered test action becomes a :class:`ConcreteHttpCall`. When an action
operates on a resource created by an earlier POST, its concrete path is
rewritten against the location captured from that POST via
:func:`resolve_location`.
"""

from __future__ import annotations

from dataclasses import dataclass, field


@dataclass(slots=True)
class ConcreteHttpCall:
    verb: str
    url: str
    headers: list[tuple[str, str]]
    body: str | None = None
    content_type: str | None = None
    # structured parts kept for suite emission
    path: str = ""
    query: str = ""


@dataclass(slots=True)
class AuthCredential:
    """A named set of headers granting access, e.g. an API key."""

    label: str
    headers: list[tuple[str, str]] = field(default_factory=list)


class LocationMismatch(Exception):
    """The concrete path does not extend the creation path by one id segment."""


def resolve_location(saved: str, concrete_path: str, creation_path: str) -> str:
    """Swap the id segment of ``concrete_path`` for a captured location.

    ``concrete_path`` must start with ``creation_path`` followed by exactly
    one id segment; whatever trails the id is appended to ``saved``:
    saved="/r/77", concrete="/r/-324/rating", creation="/r" -> "/r/77/rating".
    """
    prefix = creation_path.rstrip("/")
    if not concrete_path.startswith(prefix + "/"):
        raise LocationMismatch(
            f"path {concrete_path!r} does not extend creation path {creation_path!r}"
        )
    rest = concrete_path[len(prefix) + 1 :]
    id_segment, _, suffix = rest.partition("/")
    if not id_segment:
        raise LocationMismatch(f"no id segment after {creation_path!r} in {concrete_path!r}")
    return saved + "/" + suffix if suffix else saved
