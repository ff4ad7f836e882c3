"""Per-target heuristic scoring of executed test cases.

Every testing target gets a score h in [0, 1] where 1 means covered.
Statement targets are binary. Branch targets carry a gradient derived from
the branch distance d reported by the driver: h = 1 - d/(d+1), so smaller
distances score closer to coverage. HTTP status-class targets (2xx/4xx/5xx
per endpoint) are binary and double as the fault oracle: a 5xx response is
recorded both as a search objective and as a revealed fault.
"""

from __future__ import annotations

import logging
import math
from dataclasses import dataclass, field
from typing import NamedTuple

from .apimodel import ActionTemplate, ApiSchema
from .errors import ContractViolation, ProtocolError
from .genome import Individual

logger = logging.getLogger(__name__)

STATEMENT = "statement"
BRANCH = "branch"
HTTP_STATUS = "http_status"

_STATUS_CLASSES = (2, 4, 5)


class TargetId(NamedTuple):
    kind: str
    name: str


@dataclass(slots=True)
class FitnessValue:
    scores: dict[TargetId, float] = field(default_factory=dict)


@dataclass(slots=True)
class ExecutionResult:
    status: int | None
    body_excerpt: str = ""
    extracted_location: str | None = None
    elapsed_ms: int = 0

    def __post_init__(self):
        if self.status is not None and not (100 <= self.status <= 599):
            raise ContractViolation(f"status {self.status} outside [100, 599]")
        if self.elapsed_ms < 0:
            raise ContractViolation("elapsed_ms must be non-negative")

    @property
    def timed_out(self) -> bool:
        return self.status is None


@dataclass(slots=True)
class EvaluatedIndividual:
    individual: Individual
    fitness: FitnessValue
    results: list[ExecutionResult]

    @property
    def size(self) -> int:
        return len(self.individual.actions)

    @property
    def is_fault_revealing(self) -> bool:
        return any(r.status is not None and 500 <= r.status <= 599 for r in self.results)

    def locations(self) -> dict[int, str]:
        return {
            i: r.extracted_location
            for i, r in enumerate(self.results)
            if r.extracted_location is not None
        }


_BELOW_ONE = math.nextafter(1.0, 0.0)


def normalize_distance(d: float) -> float:
    """Map a non-negative distance into [0, 1): d/(d+1).

    Strictly increasing, 0 only at d = 0. For astronomically large d the
    quotient saturates at the largest float below 1 so the result never
    reaches the covered score.
    """
    if not math.isfinite(d) or d < 0:
        raise ContractViolation(f"distance must be finite and non-negative, got {d!r}")
    return min(d / (d + 1.0), _BELOW_ONE)


def branch_heuristic(d: float) -> float:
    """Branch score: 1 when taken (d = 0), decaying towards 0 with distance."""
    return 1.0 - normalize_distance(d)


def status_target(status_class: int, verb: str, path: str) -> TargetId:
    return TargetId(HTTP_STATUS, f"STATUS:{status_class}xx:{verb}:{path}")


def status_zero_scores(schema: ApiSchema) -> dict[TargetId, float]:
    """All status-class targets of the schema scored 0 (the per-evaluation base)."""
    scores: dict[TargetId, float] = {}
    for t in schema.templates:
        path = schema.full_path(t)
        for c in _STATUS_CLASSES:
            scores[status_target(c, t.verb, path)] = 0.0
    return scores


def status_targets(
    results: list[ExecutionResult],
    executed_templates: list[ActionTemplate],
    schema: ApiSchema,
    zero_scores: dict[TargetId, float] | None = None,
) -> FitnessValue:
    """Score HTTP status-class targets for one evaluation.

    Each executed action marks its (class, verb, path) target covered when
    the response class is 2, 4 or 5; every other status-class target of the
    schema's templates scores 0 so the search knows they exist.
    """
    scores = dict(zero_scores if zero_scores is not None else status_zero_scores(schema))
    for result, template in zip(results, executed_templates):
        if result.status is None:
            continue
        c = result.status // 100
        if c in (2, 4, 5):
            scores[status_target(c, template.verb, schema.full_path(template))] = 1.0
    return FitnessValue(scores)


def merge(driver_report, status_part: FitnessValue) -> FitnessValue:
    """Combine a driver coverage report with the status-class scores.

    Statement targets are binary; branch targets go through the distance
    heuristic. A report naming one id with contradictory kinds is a protocol
    error; plain duplicates keep the last occurrence with a warning.
    """
    scores = dict(status_part.scores)
    kinds_seen: dict[str, str] = {}
    for t in driver_report.targets:
        prior = kinds_seen.get(t.id)
        if prior is not None and prior != t.kind:
            raise ProtocolError(f"target {t.id!r} reported as both {prior} and {t.kind}")
        if prior is not None:
            logger.warning("duplicate target %s in coverage report; last wins", t.id)
        kinds_seen[t.id] = t.kind
        if t.kind == STATEMENT:
            scores[TargetId(STATEMENT, t.id)] = 1.0 if t.covered else 0.0
        else:
            if t.covered:
                h = 1.0
            else:
                if t.distance is None:
                    raise ProtocolError(f"uncovered branch {t.id!r} carries no distance")
                h = branch_heuristic(t.distance)
            scores[TargetId(BRANCH, t.id)] = h
    return FitnessValue(scores)
