"""Data model for a parsed API: action templates and parameter specs.

These values are produced once by the schema parser and shared read-only by
the sampler, the renderer and the suite writer.
"""

from __future__ import annotations

from dataclasses import dataclass, field

from .errors import SchemaError

VERBS = ("GET", "POST", "PUT", "DELETE", "PATCH")
BODY_VERBS = frozenset({"POST", "PUT", "PATCH"})

# parameter kinds understood by the genotype builder
KIND_STRING = "string"
KIND_INT32 = "int32"
KIND_INT64 = "int64"
KIND_DOUBLE = "double"
KIND_BOOLEAN = "boolean"
KIND_DATETIME = "date-time"
KIND_ENUM = "enum"
KIND_OBJECT = "object"
KIND_ARRAY = "array"


@dataclass(slots=True)
class Constraints:
    minimum: float | int | None = None
    maximum: float | int | None = None
    max_length: int | None = None
    max_items: int | None = None


@dataclass(slots=True)
class ParamSpec:
    name: str
    kind: str
    required: bool = True
    constraints: Constraints | None = None
    enum_values: tuple = ()
    fields: tuple["ParamSpec", ...] = ()
    element: "ParamSpec | None" = None

    def __post_init__(self):
        if self.kind == KIND_ENUM and not self.enum_values:
            raise SchemaError(f"enum parameter {self.name!r} has no values")
        if self.kind == KIND_ARRAY and self.element is None:
            raise SchemaError(f"array parameter {self.name!r} has no element spec")
        if self.kind == KIND_OBJECT:
            names = [f.name for f in self.fields]
            if len(names) != len(set(names)):
                raise SchemaError(f"object parameter {self.name!r} has duplicate fields")


@dataclass(slots=True)
class PathSegment:
    """One path segment: either a literal or a named placeholder."""

    literal: str | None = None
    placeholder: str | None = None

    def render_pattern(self) -> str:
        return self.literal if self.literal is not None else "{%s}" % self.placeholder


@dataclass(slots=True)
class ActionTemplate:
    verb: str
    path: tuple[PathSegment, ...]
    path_params: tuple[ParamSpec, ...] = ()
    query_params: tuple[ParamSpec, ...] = ()
    header_params: tuple[ParamSpec, ...] = ()
    body_spec: ParamSpec | None = None
    produces_location: bool = False

    def __post_init__(self):
        if self.verb not in VERBS:
            raise SchemaError(f"unsupported verb {self.verb!r}")
        if self.body_spec is not None and self.verb not in BODY_VERBS:
            raise SchemaError(f"{self.verb} {self.path_string} must not carry a body")
        names = [s.placeholder for s in self.path if s.placeholder is not None]
        if len(names) != len(set(names)):
            raise SchemaError(f"duplicate path placeholders in {self.path_string}")

    def placeholder_spec(self, name: str) -> ParamSpec:
        for spec in self.path_params:
            if spec.name == name:
                return spec
        return ParamSpec(name=name, kind=KIND_STRING)

    @property
    def path_string(self) -> str:
        return "/" + "/".join(s.render_pattern() for s in self.path)

    @property
    def placeholder_names(self) -> tuple[str, ...]:
        return tuple(s.placeholder for s in self.path if s.placeholder is not None)

    def is_literal_path(self) -> bool:
        return all(s.literal is not None for s in self.path)


@dataclass(slots=True)
class ApiSchema:
    base_path: str
    templates: tuple[ActionTemplate, ...]
    raw_title: str = ""
    # template index -> index of the creation template whose path it extends
    link_sources: dict[int, int] = field(default_factory=dict)

    def __post_init__(self):
        if self.base_path and not self.base_path.startswith("/"):
            raise SchemaError(f"base path {self.base_path!r} must start with '/'")
        pairs = [(t.verb, t.path_string) for t in self.templates]
        if len(pairs) != len(set(pairs)):
            raise SchemaError("duplicate (verb, path) pair in schema")
        if not self.link_sources:
            self.link_sources = _find_link_sources(self.templates)

    def full_path(self, template: ActionTemplate) -> str:
        return self.base_path + template.path_string


def _find_link_sources(templates: tuple[ActionTemplate, ...]) -> dict[int, int]:
    """Map each template to the creation endpoint its path extends, if any.

    A template T extends a creation endpoint C when T's path is C's literal
    path plus one placeholder segment plus an arbitrary (possibly empty)
    suffix. Such a T can operate on a resource created by C.
    """
    sources: dict[int, int] = {}
    creators = [
        (ci, c)
        for ci, c in enumerate(templates)
        if c.verb == "POST" and c.produces_location and c.is_literal_path()
    ]
    for ti, t in enumerate(templates):
        for ci, c in creators:
            if ti == ci or len(t.path) < len(c.path) + 1:
                continue
            head, pivot = t.path[: len(c.path)], t.path[len(c.path)]
            if pivot.placeholder is None:
                continue
            if all(
                a.literal is not None and a.literal == b.literal
                for a, b in zip(head, c.path)
            ):
                sources[ti] = ci
                break
    return sources
