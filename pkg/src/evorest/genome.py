"""Recursive gene representation of test cases, with sampling and mutation.

A test case (:class:`Individual`) is an ordered list of REST actions. Each
action holds one gene per parameter of its template, aligned positionally:
path placeholders first (in path order), then query params, then header
params, then the body. Genes are treated as immutable; every operator
returns new values and shares unchanged subtrees.
"""

from __future__ import annotations

import json
import logging
import re
from dataclasses import dataclass
from random import Random
from urllib.parse import quote

from .apimodel import (
    KIND_ARRAY,
    KIND_BOOLEAN,
    KIND_DATETIME,
    KIND_DOUBLE,
    KIND_ENUM,
    KIND_INT32,
    KIND_INT64,
    KIND_OBJECT,
    KIND_STRING,
    ActionTemplate,
    ApiSchema,
    ParamSpec,
)
from .errors import ConfigError
from .httpcall import AuthCredential, ConcreteHttpCall, LocationMismatch, resolve_location

logger = logging.getLogger(__name__)

INT32_MIN, INT32_MAX = -(2**31), 2**31 - 1
INT64_MIN, INT64_MAX = -(2**63), 2**63 - 1

PRINTABLE = "".join(chr(c) for c in range(0x20, 0x7F))
DEFAULT_MAX_STRING = 64
DEFAULT_MAX_ARRAY = 4
MAX_TEST_SIZE_DEFAULT = 10

# geometric string lengths with mean 5
_STRING_CONTINUE_P = 5.0 / 6.0

YEAR_RANGE = (1900, 2100)
_DATE_FIELD_RANGES = {
    "year": YEAR_RANGE,
    "month": (1, 12),
    "day": (1, 31),
    "hour": (0, 23),
    "minute": (0, 59),
    "second": (0, 59),
}


@dataclass(slots=True)
class IntGene:
    value: int
    low: int = INT32_MIN
    high: int = INT32_MAX


@dataclass(slots=True)
class DoubleGene:
    value: float


@dataclass(slots=True)
class BooleanGene:
    value: bool


@dataclass(slots=True)
class StringGene:
    value: str
    max_len: int = DEFAULT_MAX_STRING


@dataclass(slots=True)
class DateTimeGene:
    year: int
    month: int
    day: int
    hour: int
    minute: int
    second: int

    def render(self) -> str:
        # unpadded month/day, e.g. "1968-7-28T10:40:58.000Z"
        return f"{self.year}-{self.month}-{self.day}T{self.hour}:{self.minute:02d}:{self.second:02d}.000Z"


@dataclass(slots=True)
class EnumGene:
    values: tuple
    index: int


@dataclass(slots=True)
class OptionalGene:
    active: bool
    inner: "Gene"


@dataclass(slots=True)
class ObjectGene:
    fields: tuple[tuple[str, "Gene"], ...]


@dataclass(slots=True)
class ArrayGene:
    elements: tuple["Gene", ...]
    max_size: int = DEFAULT_MAX_ARRAY
    element_spec: ParamSpec | None = None


@dataclass(slots=True)
class ResourceLinkGene:
    """Binds a later call's resource id to the location produced earlier."""

    source_action_index: int
    creation_path: str


Gene = (
    IntGene
    | DoubleGene
    | BooleanGene
    | StringGene
    | DateTimeGene
    | EnumGene
    | OptionalGene
    | ObjectGene
    | ArrayGene
    | ResourceLinkGene
)


@dataclass(slots=True)
class RestAction:
    template: ActionTemplate
    genes: tuple[Gene, ...]
    path_override: ResourceLinkGene | None = None


@dataclass(slots=True)
class Individual:
    actions: tuple[RestAction, ...]
    auth_index: int | None = None

    @property
    def size(self) -> int:
        return len(self.actions)


# ---------------------------------------------------------------------------
# sampling


def sample_gene(spec: ParamSpec, rng: Random, depth: int = 0) -> Gene:
    """Draw a random gene for one parameter spec."""
    kind = spec.kind
    c = spec.constraints
    if kind == KIND_INT32 or kind == KIND_INT64:
        lo, hi = (INT32_MIN, INT32_MAX) if kind == KIND_INT32 else (INT64_MIN, INT64_MAX)
        if c is not None:
            if c.minimum is not None:
                lo = max(lo, int(c.minimum))
            if c.maximum is not None:
                hi = min(hi, int(c.maximum))
        return IntGene(rng.randint(lo, hi), lo, hi)
    if kind == KIND_DOUBLE:
        lo = c.minimum if c is not None and c.minimum is not None else -1000.0
        hi = c.maximum if c is not None and c.maximum is not None else 1000.0
        return DoubleGene(rng.uniform(float(lo), float(hi)))
    if kind == KIND_BOOLEAN:
        return BooleanGene(rng.random() < 0.5)
    if kind == KIND_STRING:
        max_len = c.max_length if c is not None and c.max_length is not None else DEFAULT_MAX_STRING
        length = 0
        while length < max_len and rng.random() < _STRING_CONTINUE_P:
            length += 1
        return StringGene("".join(rng.choice(PRINTABLE) for _ in range(length)), max_len)
    if kind == KIND_DATETIME:
        return DateTimeGene(
            rng.randint(*YEAR_RANGE),
            rng.randint(1, 12),
            rng.randint(1, 31),
            rng.randint(0, 23),
            rng.randint(0, 59),
            rng.randint(0, 59),
        )
    if kind == KIND_ENUM:
        return EnumGene(spec.enum_values, rng.randrange(len(spec.enum_values)))
    if kind == KIND_OBJECT:
        members = []
        for f in spec.fields:
            g = sample_gene(f, rng, depth + 1)
            if not f.required:
                g = OptionalGene(rng.random() < 0.5, g)
            members.append((f.name, g))
        return ObjectGene(tuple(members))
    if kind == KIND_ARRAY:
        max_size = (
            min(c.max_items, DEFAULT_MAX_ARRAY)
            if c is not None and c.max_items is not None
            else DEFAULT_MAX_ARRAY
        )
        size = rng.randint(0, max_size)
        elems = tuple(sample_gene(spec.element, rng, depth + 1) for _ in range(size))
        return ArrayGene(elems, max_size, spec.element)
    raise ConfigError(f"parameter {spec.name!r} has unsupported kind {kind!r}")


def genotype_for(template: ActionTemplate, rng: Random) -> tuple[Gene, ...]:
    """Build one gene per parameter of the template.

    Order is fixed: path placeholders, query params, header params, body.
    Optional params are wrapped in Optional genes. The structure is
    deterministic for identical templates; only the values are random.
    """
    genes: list[Gene] = []
    for seg in template.path:
        if seg.placeholder is not None:
            genes.append(sample_gene(template.placeholder_spec(seg.placeholder), rng))
    for spec in template.query_params:
        g = sample_gene(spec, rng)
        genes.append(g if spec.required else OptionalGene(rng.random() < 0.5, g))
    for spec in template.header_params:
        g = sample_gene(spec, rng)
        genes.append(g if spec.required else OptionalGene(rng.random() < 0.5, g))
    if template.body_spec is not None:
        g = sample_gene(template.body_spec, rng)
        genes.append(g if template.body_spec.required else OptionalGene(rng.random() < 0.5, g))
    return tuple(genes)


def fresh_action(template: ActionTemplate, rng: Random) -> RestAction:
    return RestAction(template, genotype_for(template, rng))


def sample_individual(
    schema: ApiSchema,
    auth_count: int,
    rng: Random,
    max_test_size: int = MAX_TEST_SIZE_DEFAULT,
) -> Individual:
    """Draw a random test case.

    Length is uniform in [1, max_test_size] and templates are drawn
    uniformly. When a drawn template operates on a created resource
    (its path extends a creation endpoint), the matching creation POST is
    wired in front of it with probability 0.5 - either by linking to an
    earlier creation already present or by inserting a new one when there
    is room.
    """
    length = rng.randint(1, max_test_size)
    actions: list[RestAction] = []
    while len(actions) < length:
        ti = rng.randrange(len(schema.templates))
        template = schema.templates[ti]
        ci = schema.link_sources.get(ti)
        if ci is not None and rng.random() < 0.5:
            creation = schema.templates[ci]
            creation_path = schema.full_path(creation)
            prior = _latest_creation(actions, creation)
            if prior is not None:
                act = fresh_action(template, rng)
                actions.append(
                    RestAction(act.template, act.genes, ResourceLinkGene(prior, creation_path))
                )
                continue
            if len(actions) + 2 <= length:
                actions.append(fresh_action(creation, rng))
                act = fresh_action(template, rng)
                actions.append(
                    RestAction(
                        act.template,
                        act.genes,
                        ResourceLinkGene(len(actions) - 1, creation_path),
                    )
                )
                continue
            # no room to insert the creation: fall through to a plain action
        actions.append(fresh_action(template, rng))
    auth_index = None
    if auth_count > 0:
        pick = rng.randrange(auth_count + 1)
        auth_index = None if pick == 0 else pick - 1
    return Individual(tuple(actions), auth_index)


def _latest_creation(actions: list[RestAction], creation: ActionTemplate) -> int | None:
    for i in range(len(actions) - 1, -1, -1):
        if actions[i].template is creation:
            return i
    return None


# ---------------------------------------------------------------------------
# mutation


def mutate_gene(g: Gene, rng: Random) -> Gene:
    """Return a mutated copy of one gene.

    Scalars move by small deltas (ints by +/-2^k with k in [0,10], doubles
    by a factor in [0.5,2] or +/-1, strings by one character edit); container
    genes recurse into one child, arrays occasionally resize by one.
    """
    if type(g) is IntGene:
        k = rng.randint(0, 10)
        delta = 1 << k
        if rng.random() < 0.5:
            delta = -delta
        v = min(g.high, max(g.low, g.value + delta))
        if v == g.value:
            v = min(g.high, max(g.low, g.value - delta))
        return IntGene(v, g.low, g.high)
    if type(g) is DoubleGene:
        if rng.random() < 0.5:
            return DoubleGene(g.value * rng.uniform(0.5, 2.0))
        return DoubleGene(g.value + (1.0 if rng.random() < 0.5 else -1.0))
    if type(g) is BooleanGene:
        return BooleanGene(not g.value)
    if type(g) is StringGene:
        return _mutate_string(g, rng)
    if type(g) is DateTimeGene:
        return _mutate_datetime(g, rng)
    if type(g) is EnumGene:
        n = len(g.values)
        if n < 2:
            return EnumGene(g.values, g.index)
        idx = rng.randrange(n - 1)
        if idx >= g.index:
            idx += 1
        return EnumGene(g.values, idx)
    if type(g) is OptionalGene:
        return OptionalGene(not g.active, g.inner)
    if type(g) is ObjectGene:
        if not g.fields:
            return ObjectGene(g.fields)
        i = rng.randrange(len(g.fields))
        name, child = g.fields[i]
        fields = g.fields[:i] + ((name, mutate_gene(child, rng)),) + g.fields[i + 1 :]
        return ObjectGene(fields)
    if type(g) is ArrayGene:
        return _mutate_array(g, rng)
    if type(g) is ResourceLinkGene:
        return ResourceLinkGene(g.source_action_index, g.creation_path)
    raise ConfigError(f"cannot mutate gene of type {type(g).__name__}")


def _mutate_string(g: StringGene, rng: Random) -> StringGene:
    s = g.value
    ops = []
    if len(s) < g.max_len:
        ops.append("insert")
    if s:
        ops.append("delete")
        ops.append("replace")
    if not ops:
        return StringGene(s, g.max_len)
    op = ops[rng.randrange(len(ops))]
    if op == "insert":
        pos = rng.randint(0, len(s))
        return StringGene(s[:pos] + rng.choice(PRINTABLE) + s[pos:], g.max_len)
    if op == "delete":
        pos = rng.randrange(len(s))
        return StringGene(s[:pos] + s[pos + 1 :], g.max_len)
    pos = rng.randrange(len(s))
    ch = rng.choice(PRINTABLE)
    while ch == s[pos]:
        ch = rng.choice(PRINTABLE)
    return StringGene(s[:pos] + ch + s[pos + 1 :], g.max_len)


def _mutate_datetime(g: DateTimeGene, rng: Random) -> DateTimeGene:
    names = list(_DATE_FIELD_RANGES)
    name = names[rng.randrange(len(names))]
    lo, hi = _DATE_FIELD_RANGES[name]
    old = getattr(g, name)
    v = rng.randint(lo, hi - 1)
    if v >= old:
        v += 1
    values = {n: getattr(g, n) for n in names}
    values[name] = v
    return DateTimeGene(**values)


def _mutate_array(g: ArrayGene, rng: Random) -> ArrayGene:
    can_grow = len(g.elements) < g.max_size and g.element_spec is not None
    can_shrink = len(g.elements) > 0
    resize = rng.random() < (1.0 / 3.0)
    if (resize or not g.elements) and (can_grow or can_shrink):
        grow = can_grow and (not can_shrink or rng.random() < 0.5)
        if grow:
            return ArrayGene(
                g.elements + (sample_gene(g.element_spec, rng),), g.max_size, g.element_spec
            )
        i = rng.randrange(len(g.elements))
        return ArrayGene(g.elements[:i] + g.elements[i + 1 :], g.max_size, g.element_spec)
    if not g.elements:
        return ArrayGene(g.elements, g.max_size, g.element_spec)
    i = rng.randrange(len(g.elements))
    elems = g.elements[:i] + (mutate_gene(g.elements[i], rng),) + g.elements[i + 1 :]
    return ArrayGene(elems, g.max_size, g.element_spec)


def mutate_individual(
    ind: Individual,
    schema: ApiSchema,
    auth_count: int,
    rng: Random,
    max_test_size: int = MAX_TEST_SIZE_DEFAULT,
) -> Individual:
    """Apply exactly one mutation, chosen uniformly among the applicable arms:

    (a) mutate one gene, (b) toggle one Optional, (c) add one action,
    (d) remove one action, (e) change the auth choice. The input is not
    modified.
    """
    arms = []
    gene_slots = [
        (ai, gi) for ai, a in enumerate(ind.actions) for gi in range(len(a.genes))
    ]
    if gene_slots:
        arms.append("gene")
    optional_paths = _optional_paths(ind)
    if optional_paths:
        arms.append("optional")
    if len(ind.actions) < max_test_size:
        arms.append("add")
    if len(ind.actions) > 1:
        arms.append("remove")
    if auth_count > 0:
        arms.append("auth")
    if not arms:
        return Individual(ind.actions, ind.auth_index)
    arm = arms[rng.randrange(len(arms))]
    if arm == "gene":
        ai, gi = gene_slots[rng.randrange(len(gene_slots))]
        action = ind.actions[ai]
        genes = (
            action.genes[:gi] + (mutate_gene(action.genes[gi], rng),) + action.genes[gi + 1 :]
        )
        new_action = RestAction(action.template, genes, action.path_override)
        return Individual(_replace(ind.actions, ai, new_action), ind.auth_index)
    if arm == "optional":
        ai, gi, path = optional_paths[rng.randrange(len(optional_paths))]
        action = ind.actions[ai]
        genes = (
            action.genes[:gi] + (_toggle_at(action.genes[gi], path),) + action.genes[gi + 1 :]
        )
        new_action = RestAction(action.template, genes, action.path_override)
        return Individual(_replace(ind.actions, ai, new_action), ind.auth_index)
    if arm == "add":
        pos = rng.randint(0, len(ind.actions))
        ti = rng.randrange(len(schema.templates))
        new_action = fresh_action(schema.templates[ti], rng)
        actions = ind.actions[:pos] + (new_action,) + ind.actions[pos:]
        return Individual(_shift_links(actions, pos, +1), ind.auth_index)
    if arm == "remove":
        pos = rng.randrange(len(ind.actions))
        actions = ind.actions[:pos] + ind.actions[pos + 1 :]
        return Individual(_repair_removed(actions, pos, rng), ind.auth_index)
    # auth
    choices = [None] + list(range(auth_count))
    choices.remove(ind.auth_index)
    return Individual(ind.actions, choices[rng.randrange(len(choices))])


def _replace(actions: tuple[RestAction, ...], i: int, a: RestAction) -> tuple[RestAction, ...]:
    return actions[:i] + (a,) + actions[i + 1 :]


def _optional_paths(ind: Individual) -> list[tuple[int, int, tuple[int, ...]]]:
    """All Optional nodes as (action index, gene index, child path)."""
    found = []

    def walk(g: Gene, ai: int, gi: int, path: tuple[int, ...]):
        if type(g) is OptionalGene:
            found.append((ai, gi, path))
            walk(g.inner, ai, gi, path + (0,))
        elif type(g) is ObjectGene:
            for i, (_, child) in enumerate(g.fields):
                walk(child, ai, gi, path + (i,))
        elif type(g) is ArrayGene:
            for i, child in enumerate(g.elements):
                walk(child, ai, gi, path + (i,))

    for ai, action in enumerate(ind.actions):
        for gi, g in enumerate(action.genes):
            walk(g, ai, gi, ())
    return found


def _toggle_at(g: Gene, path: tuple[int, ...]) -> Gene:
    if not path:
        assert type(g) is OptionalGene
        return OptionalGene(not g.active, g.inner)
    i, rest = path[0], path[1:]
    if type(g) is OptionalGene:
        return OptionalGene(g.active, _toggle_at(g.inner, rest))
    if type(g) is ObjectGene:
        name, child = g.fields[i]
        return ObjectGene(g.fields[:i] + ((name, _toggle_at(child, rest)),) + g.fields[i + 1 :])
    if type(g) is ArrayGene:
        return ArrayGene(
            g.elements[:i] + (_toggle_at(g.elements[i], rest),) + g.elements[i + 1 :],
            g.max_size,
            g.element_spec,
        )
    raise AssertionError("optional path does not match gene tree")


def _shift_links(actions: tuple[RestAction, ...], pos: int, delta: int) -> tuple[RestAction, ...]:
    out = []
    for i, a in enumerate(actions):
        link = a.path_override
        if link is not None and link.source_action_index >= pos and i != pos:
            link = ResourceLinkGene(link.source_action_index + delta, link.creation_path)
            a = RestAction(a.template, a.genes, link)
        out.append(a)
    return tuple(out)


def _repair_removed(actions: tuple[RestAction, ...], removed: int, rng: Random) -> tuple[RestAction, ...]:
    """Fix links after deleting the action at ``removed``.

    Links to the deleted creation are cleared and the dependent id
    placeholder is re-randomized; links past the gap shift down by one.
    """
    out = []
    for a in actions:
        link = a.path_override
        if link is None:
            out.append(a)
            continue
        if link.source_action_index == removed:
            genes = a.genes
            ph = _linked_placeholder_index(a, link)
            if ph is not None:
                genes = genes[:ph] + (mutate_gene(genes[ph], rng),) + genes[ph + 1 :]
            out.append(RestAction(a.template, genes, None))
        elif link.source_action_index > removed:
            out.append(
                RestAction(
                    a.template,
                    a.genes,
                    ResourceLinkGene(link.source_action_index - 1, link.creation_path),
                )
            )
        else:
            out.append(a)
    return tuple(out)


def _linked_placeholder_index(action: RestAction, link: ResourceLinkGene) -> int | None:
    """Gene index of the id placeholder a link binds.

    Linkable paths extend an all-literal creation path by one placeholder
    (plus an arbitrary suffix), so the bound placeholder is the first one,
    and path placeholders come first in the gene tuple.
    """
    for seg in action.template.path:
        if seg.placeholder is not None:
            return 0
    return None


# ---------------------------------------------------------------------------
# rendering

_URL_SAFE = re.compile(r"[A-Za-z0-9_.~-]*\Z")


def _urlquote(s: str) -> str:
    return s if _URL_SAFE.match(s) else quote(s, safe="")


def render_scalar(g: Gene) -> str:
    if type(g) is IntGene:
        return str(g.value)
    if type(g) is DoubleGene:
        return repr(g.value)
    if type(g) is BooleanGene:
        return "true" if g.value else "false"
    if type(g) is StringGene:
        return g.value
    if type(g) is DateTimeGene:
        return g.render()
    if type(g) is EnumGene:
        v = g.values[g.index]
        return v if isinstance(v, str) else json.dumps(v)
    if type(g) is OptionalGene:
        return render_scalar(g.inner)
    return json.dumps(to_jsonable(g), separators=(",", ":"))


def to_jsonable(g: Gene):
    """Gene tree -> plain value for JSON body serialization."""
    t = type(g)
    if t is IntGene:
        return g.value
    if t is DoubleGene:
        return g.value
    if t is BooleanGene:
        return g.value
    if t is StringGene:
        return g.value
    if t is DateTimeGene:
        return g.render()
    if t is EnumGene:
        return g.values[g.index]
    if t is OptionalGene:
        return to_jsonable(g.inner)
    if t is ObjectGene:
        out = {}
        for name, child in g.fields:
            if type(child) is OptionalGene and not child.active:
                continue
            out[name] = to_jsonable(child)
        return out
    if t is ArrayGene:
        return [
            to_jsonable(e)
            for e in g.elements
            if not (type(e) is OptionalGene and not e.active)
        ]
    raise ConfigError(f"gene {type(g).__name__} has no JSON form")


def render_action(
    ind: Individual,
    index: int,
    resolved_locations: dict[int, str],
    base_path: str = "",
    base_url: str = "",
    credentials: tuple[AuthCredential, ...] = (),
) -> ConcreteHttpCall:
    """Render one action to a concrete call.

    ``resolved_locations`` maps creation action indices to captured
    locations; a linked action whose creation succeeded is rewritten via
    resolve_location, otherwise its own id gene value is used as-is.
    """
    action = ind.actions[index]
    template = action.template
    gi = 0
    parts = []
    for seg in template.path:
        if seg.literal is not None:
            parts.append(seg.literal)
        else:
            parts.append(_urlquote(render_scalar(action.genes[gi])))
            gi += 1
    path = base_path + "/" + "/".join(parts)
    link = action.path_override
    if link is not None:
        saved = resolved_locations.get(link.source_action_index)
        if saved is not None:
            try:
                path = resolve_location(saved, path, link.creation_path)
            except LocationMismatch:
                logger.warning("location for action %d does not match %s; using concrete path", index, path)
    query_pairs = []
    for spec in template.query_params:
        g = action.genes[gi]
        gi += 1
        if type(g) is OptionalGene:
            if not g.active:
                continue
            g = g.inner
        query_pairs.append((spec.name, render_scalar(g)))
    headers: list[tuple[str, str]] = []
    if ind.auth_index is not None and ind.auth_index < len(credentials):
        headers.extend(credentials[ind.auth_index].headers)
    for spec in template.header_params:
        g = action.genes[gi]
        gi += 1
        if type(g) is OptionalGene:
            if not g.active:
                continue
            g = g.inner
        headers.append((spec.name, render_scalar(g)))
    body = None
    if template.body_spec is not None:
        g = action.genes[gi]
        gi += 1
        if not (type(g) is OptionalGene and not g.active):
            body = json.dumps(to_jsonable(g), separators=(",", ":"))
    query = "&".join(f"{_urlquote(n)}={_urlquote(v)}" for n, v in query_pairs)
    url = base_url + path + ("?" + query if query else "")
    return ConcreteHttpCall(
        verb=template.verb,
        url=url,
        headers=headers,
        body=body,
        content_type="application/json" if body is not None else None,
        path=path,
        query=query,
    )


def render(
    ind: Individual,
    resolved_locations: dict[int, str],
    base_path: str = "",
    base_url: str = "",
    credentials: tuple[AuthCredential, ...] = (),
) -> list[ConcreteHttpCall]:
    """Render the whole test case; deterministic for fixed inputs."""
    return [
        render_action(ind, i, resolved_locations, base_path, base_url, credentials)
        for i in range(len(ind.actions))
    ]
