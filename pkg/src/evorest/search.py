"""Many-independent-objective search over REST test cases.

MIO keeps one bounded population per testing target plus an archive of the
single best covering test per covered target. Early in the run it mostly
samples fresh random tests; as the budget is consumed it shifts to mutating
members of uncovered targets' populations, and population capacity shrinks
down to one ("focused phase"). A pure-random baseline shares the loop but
never consults the archive when sampling.

The run is fully deterministic given (seed, config, deterministic SUT) when
an evaluation budget is used and a deterministic clock is injected.
"""

from __future__ import annotations

import enum
import json
import logging
import time
from dataclasses import dataclass, field
from random import Random

from .apimodel import ApiSchema
from .driver import DriverClient
from .errors import ResetFailedError, SutUnreachableError
from .executor import DEFAULT_TIMEOUT_MS, execute
from .fitness import (
    HTTP_STATUS,
    EvaluatedIndividual,
    FitnessValue,
    TargetId,
    merge,
    status_targets,
    status_zero_scores,
)
from .genome import Individual, mutate_individual, render, sample_individual

logger = logging.getLogger(__name__)


class Algorithm(enum.Enum):
    MIO = "MIO"
    RANDOM = "RANDOM"


@dataclass
class SearchConfig:
    max_time_seconds: int = 60
    max_evaluations: int | None = None
    p_random_start: float = 0.5
    population_per_target_start: int = 10
    focus_fraction: float = 0.5
    max_test_size: int = 10
    seed: int = 0
    algorithm: Algorithm = Algorithm.MIO
    call_timeout_ms: int = DEFAULT_TIMEOUT_MS

    def __post_init__(self):
        if not 0.0 <= self.p_random_start <= 1.0:
            raise ValueError("p_random_start must be in [0, 1]")
        if not 0.0 < self.focus_fraction <= 1.0:
            raise ValueError("focus_fraction must be in (0, 1]")
        if self.population_per_target_start < 1 or self.max_test_size < 1:
            raise ValueError("sizes must be >= 1")
        if self.max_time_seconds < 0:
            raise ValueError("max_time_seconds must be >= 0")


@dataclass(slots=True)
class _Entry:
    h: float
    ev: EvaluatedIndividual
    discovered: int

    def sort_key(self):
        # best first: higher h, then smaller test, then earlier discovery
        return (-self.h, self.ev.size, self.discovered)


class Archive:
    """Per-target populations of best individuals, plus the covered set."""

    def __init__(self, config: SearchConfig, base_path: str = ""):
        self._config = config
        self.base_path = base_path
        self.populations: dict[TargetId, list[_Entry]] = {}
        self.covered: dict[TargetId, _Entry] = {}
        self._tick = 0
        self._last_cap: int | None = None

    def capacity(self, t: float) -> int:
        cfg = self._config
        return max(1, round(cfg.population_per_target_start * (1.0 - t / cfg.focus_fraction)))

    def update(self, ev: EvaluatedIndividual, t: float) -> None:
        """Fold one evaluated individual into the archive.

        Targets scored 0 are ignored. A target reaching h = 1 becomes
        covered and keeps only its smallest covering test; covered targets
        are only ever replaced by strictly smaller covering tests.
        """
        cap = self.capacity(t)
        if self._last_cap is not None and cap < self._last_cap:
            for target, pop in self.populations.items():
                if target not in self.covered and len(pop) > cap:
                    del pop[cap:]
        self._last_cap = cap
        for target, h in ev.fitness.scores.items():
            if h <= 0.0:
                continue
            held = self.covered.get(target)
            if held is not None:
                if h >= 1.0 and ev.size < held.ev.size:
                    self._tick += 1
                    entry = _Entry(1.0, ev, self._tick)
                    self.covered[target] = entry
                    self.populations[target] = [entry]
                continue
            self._tick += 1
            entry = _Entry(h, ev, self._tick)
            if h >= 1.0:
                self.covered[target] = entry
                self.populations[target] = [entry]
                continue
            pop = self.populations.get(target)
            if pop is None:
                pop = []
                self.populations[target] = pop
            pop.append(entry)
            pop.sort(key=_Entry.sort_key)
            if len(pop) > cap:
                del pop[cap:]


def sample_next(
    archive: Archive,
    schema: ApiSchema,
    t: float,
    rng: Random,
    config: SearchConfig,
    auth_count: int,
) -> Individual:
    """MIO sampling policy.

    With probability P_r(t) = p_random_start * max(0, 1 - t/focus_fraction)
    draw a fresh random individual; otherwise mutate a uniformly chosen
    member of a uniformly chosen uncovered target's population. The RANDOM
    baseline always samples fresh and never looks at the archive.
    """
    if config.algorithm is Algorithm.RANDOM:
        return sample_individual(schema, auth_count, rng, config.max_test_size)
    p_random = config.p_random_start * max(0.0, 1.0 - t / config.focus_fraction)
    if rng.random() < p_random:
        return sample_individual(schema, auth_count, rng, config.max_test_size)
    eligible = [
        target
        for target, pop in archive.populations.items()
        if pop and target not in archive.covered
    ]
    if not eligible:
        return sample_individual(schema, auth_count, rng, config.max_test_size)
    target = eligible[rng.randrange(len(eligible))]
    pop = archive.populations[target]
    entry = pop[rng.randrange(len(pop))]
    return mutate_individual(
        entry.ev.individual, schema, auth_count, rng, config.max_test_size
    )


def update_archive(archive: Archive, ev: EvaluatedIndividual, t: float) -> None:
    archive.update(ev, t)


def extract_solution(archive: Archive) -> list[EvaluatedIndividual]:
    """Final suite: best test per covered target plus the single best test
    per scored-but-uncovered target, deduplicated by rendered calls and
    ordered by target name."""
    picks: list[tuple[str, str, EvaluatedIndividual]] = []
    for target, entry in archive.covered.items():
        picks.append((target.name, target.kind, entry.ev))
    for target, pop in archive.populations.items():
        if pop and target not in archive.covered:
            picks.append((target.name, target.kind, pop[0].ev))
    picks.sort(key=lambda p: (p[0], p[1]))
    suite: list[EvaluatedIndividual] = []
    seen: set[str] = set()
    for _, _, ev in picks:
        key = _render_key(ev, archive.base_path)
        if key in seen:
            continue
        seen.add(key)
        suite.append(ev)
    return suite


def _render_key(ev: EvaluatedIndividual, base_path: str) -> str:
    calls = render(ev.individual, ev.locations(), base_path)
    parts = [repr(ev.individual.auth_index)]
    for c in calls:
        parts.append(f"{c.verb} {c.url} {c.headers!r} {c.body!r}")
    return "\n".join(parts)


@dataclass(slots=True)
class SearchStats:
    evaluations: int = 0
    covered_targets: int = 0
    total_targets: int = 0
    faults_5xx: int = 0
    elapsed_ms: int = 0
    seed: int = 0
    aborted: str | None = None

    def to_json(self) -> str:
        return json.dumps(
            {
                "evaluations": self.evaluations,
                "covered_targets": self.covered_targets,
                "total_targets": self.total_targets,
                "faults_5xx": self.faults_5xx,
                "elapsed_ms": self.elapsed_ms,
                "seed": self.seed,
            }
        )


@dataclass(slots=True)
class SearchResult:
    suite: list[EvaluatedIndividual]
    stats: SearchStats
    archive: Archive


def run_search(
    schema: ApiSchema,
    driver: DriverClient,
    config: SearchConfig,
    clock=None,
    should_stop=None,
) -> SearchResult:
    """Sample -> execute -> score -> archive until the budget runs out.

    The budget is wall-clock (max_time_seconds) unless max_evaluations is
    set, in which case only the evaluation count drives the schedule, which
    makes runs reproducible. ``clock`` may inject a deterministic time
    source; ``should_stop`` is polled each iteration for graceful shutdown.
    """
    clock = clock or time.monotonic
    rng = Random(config.seed)
    info = driver.get_info()
    base_url = driver.start_sut()
    credentials = info.auth_info
    archive = Archive(config, schema.base_path)
    known_targets: set[TargetId] = set()
    zero_scores = status_zero_scores(schema)
    started = clock()
    stats = SearchStats(seed=config.seed)

    # prime the known-target set; drivers may enumerate statements up front
    report, marker = driver.get_coverage("")
    for target in report.targets:
        known_targets.add(TargetId(target.kind, target.id))

    evaluations = 0
    while True:
        if should_stop is not None and should_stop():
            break
        if config.max_evaluations is not None:
            t = evaluations / config.max_evaluations if config.max_evaluations > 0 else 1.0
        else:
            if config.max_time_seconds <= 0:
                break
            t = (clock() - started) / config.max_time_seconds
        if t >= 1.0:
            break
        ind = sample_next(archive, schema, t, rng, config, len(credentials))
        try:
            driver.reset_state()
        except ResetFailedError as e:
            logger.warning("reset failed, skipping evaluation: %s", e)
            evaluations += 1
            continue
        try:
            results = execute(
                ind,
                base_url,
                credentials,
                driver.transport,
                base_path=schema.base_path,
                timeout_ms=config.call_timeout_ms,
                clock=clock,
            )
        except SutUnreachableError as e:
            stats.aborted = str(e)
            logger.error("aborting search, SUT unreachable: %s", e)
            break
        status_part = status_targets(
            results, [a.template for a in ind.actions], schema, zero_scores
        )
        try:
            report, marker = driver.get_coverage(marker)
        except Exception as e:  # driver gone mid-search: keep partial results
            stats.aborted = str(e)
            logger.error("aborting search, driver lost: %s", e)
            break
        fitness = merge(report, status_part)
        known_targets.update(fitness.scores)
        ev = EvaluatedIndividual(ind, fitness, results)
        archive.update(ev, t)
        evaluations += 1

    stats.evaluations = evaluations
    stats.covered_targets = len(archive.covered)
    stats.total_targets = len(known_targets)
    stats.faults_5xx = sum(
        1
        for target in archive.covered
        if target.kind == HTTP_STATUS and target.name.startswith("STATUS:5xx:")
    )
    stats.elapsed_ms = int((clock() - started) * 1000)
    return SearchResult(extract_solution(archive), stats, archive)
