"""Evolutionary system-level test generation for RESTful APIs.

Reads an API's Swagger 2.0 schema through a driver process, evolves
sequences of HTTP calls guided by coverage targets and branch-distance
heuristics, and emits self-contained executable test suites.
"""

from .apimodel import ActionTemplate, ApiSchema, Constraints, ParamSpec, PathSegment
from .driver import CoverageReport, CoverageTarget, DriverClient, SutInfo
from .executor import InProcessTransport, SocketTransport, execute
from .fitness import (
    EvaluatedIndividual,
    ExecutionResult,
    FitnessValue,
    TargetId,
    branch_heuristic,
    merge,
    normalize_distance,
    status_targets,
)
from .genome import (
    Individual,
    RestAction,
    genotype_for,
    mutate_gene,
    mutate_individual,
    render,
    sample_individual,
)
from .httpcall import AuthCredential, ConcreteHttpCall, resolve_location
from .schema import parse_schema
from .search import (
    Algorithm,
    Archive,
    SearchConfig,
    SearchResult,
    SearchStats,
    extract_solution,
    run_search,
    sample_next,
    update_archive,
)
from .writer import OutputFormat, read_neutral_suite, write_suite

__version__ = "0.1.0"
