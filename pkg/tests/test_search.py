import random

import pytest

from evorest import search as search_mod
from evorest.apimodel import ActionTemplate, ApiSchema, PathSegment
from evorest.fitness import EvaluatedIndividual, ExecutionResult, FitnessValue, TargetId
from evorest.genome import Individual, RestAction
from evorest.search import (
    Algorithm,
    Archive,
    SearchConfig,
    extract_solution,
    run_search,
    sample_next,
    update_archive,
)


def one_template_schema():
    t = ActionTemplate(verb="GET", path=(PathSegment(literal="ping"),))
    return ApiSchema(base_path="", templates=(t,))


def make_ev(schema, scores, n_actions=1, status=200):
    actions = tuple(RestAction(schema.templates[0], ()) for _ in range(n_actions))
    results = [ExecutionResult(status=status) for _ in range(n_actions)]
    return EvaluatedIndividual(Individual(actions), FitnessValue(dict(scores)), results)


T1 = TargetId("statement", "S1")
T2 = TargetId("statement", "S2")
B1 = TargetId("branch", "B1")


class TestArchiveUpdate:
    def test_zero_score_leaves_population_untouched(self):
        schema = one_template_schema()
        archive = Archive(SearchConfig())
        archive.update(make_ev(schema, {T1: 0.0}), t=0.0)
        assert T1 not in archive.populations
        assert T1 not in archive.covered

    def test_covering_collapses_population(self):
        schema = one_template_schema()
        archive = Archive(SearchConfig())
        archive.update(make_ev(schema, {B1: 0.4}, n_actions=2), t=0.0)
        archive.update(make_ev(schema, {B1: 0.6}, n_actions=3), t=0.0)
        assert len(archive.populations[B1]) == 2
        archive.update(make_ev(schema, {B1: 1.0}, n_actions=4), t=0.0)
        assert B1 in archive.covered
        assert len(archive.populations[B1]) == 1
        assert archive.populations[B1][0].ev.size == 4

    def test_covered_replaced_only_by_strictly_smaller(self):
        schema = one_template_schema()
        archive = Archive(SearchConfig())
        archive.update(make_ev(schema, {T1: 1.0}, n_actions=3), t=0.0)
        archive.update(make_ev(schema, {T1: 1.0}, n_actions=3), t=0.0)
        assert archive.covered[T1].ev.size == 3
        archive.update(make_ev(schema, {T1: 1.0}, n_actions=2), t=0.0)
        assert archive.covered[T1].ev.size == 2
        archive.update(make_ev(schema, {T1: 0.9}, n_actions=1), t=0.0)
        assert archive.covered[T1].ev.size == 2

    def test_eviction_drops_worst_by_h_then_size(self):
        schema = one_template_schema()
        config = SearchConfig(population_per_target_start=2)
        archive = Archive(config)
        archive.update(make_ev(schema, {B1: 0.4}), t=0.0)
        archive.update(make_ev(schema, {B1: 0.6}), t=0.0)
        archive.update(make_ev(schema, {B1: 0.5}), t=0.0)
        hs = sorted(e.h for e in archive.populations[B1])
        assert hs == [0.5, 0.6]

    def test_capacity_shrinks_to_one_in_focused_phase(self):
        schema = one_template_schema()
        config = SearchConfig(population_per_target_start=10, focus_fraction=0.5)
        archive = Archive(config)
        assert archive.capacity(0.0) == 10
        assert archive.capacity(0.25) == 5
        assert archive.capacity(0.5) == 1
        assert archive.capacity(0.9) == 1
        rng = random.Random(0)
        for i in range(30):
            archive.update(make_ev(schema, {B1: rng.uniform(0.01, 0.99)}), t=0.0)
        assert len(archive.populations[B1]) == 10
        archive.update(make_ev(schema, {B1: 0.5}), t=0.6)
        assert len(archive.populations[B1]) == 1

    def test_covered_size_never_increases_and_set_monotone(self):
        schema = one_template_schema()
        archive = Archive(SearchConfig())
        rng = random.Random(9)
        covered_seen = set()
        best_size = {}
        for i in range(5000):
            t = i / 5000
            scores = {}
            for target in (T1, T2, B1):
                r = rng.random()
                if r < 0.3:
                    scores[target] = 1.0 if rng.random() < 0.2 else rng.uniform(0.01, 0.99)
            archive.update(make_ev(schema, scores, n_actions=rng.randint(1, 10)), t=t)
            assert covered_seen <= set(archive.covered)
            covered_seen = set(archive.covered)
            for target, entry in archive.covered.items():
                prior = best_size.get(target)
                assert prior is None or entry.ev.size <= prior
                best_size[target] = entry.ev.size
            cap = archive.capacity(t)
            for target, pop in archive.populations.items():
                assert len(pop) <= max(cap, 1)
                assert all(e.h > 0 for e in pop)
                if target in archive.covered:
                    assert len(pop) == 1 and pop[0].h == 1.0


class TestSampleNext:
    def test_focused_phase_never_samples_fresh(self, monkeypatch):
        schema = one_template_schema()
        config = SearchConfig(seed=0)
        archive = Archive(config)
        archive.update(make_ev(schema, {B1: 0.5}), t=0.0)
        calls = {"fresh": 0, "mutate": 0}
        monkeypatch.setattr(
            search_mod, "sample_individual",
            lambda *a, **k: calls.__setitem__("fresh", calls["fresh"] + 1) or make_ev(schema, {}).individual,
        )
        monkeypatch.setattr(
            search_mod, "mutate_individual",
            lambda ind, *a, **k: calls.__setitem__("mutate", calls["mutate"] + 1) or ind,
        )
        rng = random.Random(1)
        for _ in range(500):
            sample_next(archive, schema, t=0.6, rng=rng, config=config, auth_count=0)
        assert calls["fresh"] == 0 and calls["mutate"] == 500

    def test_exploration_frequency_at_t0_is_half(self, monkeypatch):
        schema = one_template_schema()
        config = SearchConfig(seed=0, p_random_start=0.5)
        archive = Archive(config)
        archive.update(make_ev(schema, {B1: 0.5}), t=0.0)
        calls = {"fresh": 0, "mutate": 0}
        monkeypatch.setattr(
            search_mod, "sample_individual",
            lambda *a, **k: calls.__setitem__("fresh", calls["fresh"] + 1) or make_ev(schema, {}).individual,
        )
        monkeypatch.setattr(
            search_mod, "mutate_individual",
            lambda ind, *a, **k: calls.__setitem__("mutate", calls["mutate"] + 1) or ind,
        )
        rng = random.Random(3)
        n = 10_000
        for _ in range(n):
            sample_next(archive, schema, t=0.0, rng=rng, config=config, auth_count=0)
        assert abs(calls["fresh"] / n - 0.5) <= 0.05

    def test_empty_archive_always_samples_fresh(self):
        schema = one_template_schema()
        config = SearchConfig(seed=0)
        archive = Archive(config)
        rng = random.Random(2)
        for t in (0.0, 0.4, 0.9):
            ind = sample_next(archive, schema, t, rng, config, auth_count=0)
            assert len(ind.actions) >= 1

    def test_covered_targets_not_sampled_from(self, monkeypatch):
        schema = one_template_schema()
        config = SearchConfig(seed=0)
        archive = Archive(config)
        archive.update(make_ev(schema, {T1: 1.0}), t=0.0)  # covered only
        fresh = {"n": 0}
        monkeypatch.setattr(
            search_mod, "sample_individual",
            lambda *a, **k: fresh.__setitem__("n", fresh["n"] + 1) or make_ev(schema, {}).individual,
        )
        rng = random.Random(4)
        for _ in range(100):
            sample_next(archive, schema, t=0.9, rng=rng, config=config, auth_count=0)
        assert fresh["n"] == 100

    def test_random_algorithm_ignores_archive(self):
        schema = one_template_schema()
        config = SearchConfig(seed=0, algorithm=Algorithm.RANDOM)
        empty = Archive(config)
        full = Archive(config)
        for i in range(20):
            full.update(make_ev(schema, {B1: 0.3 + i * 0.01}, n_actions=1 + i % 3), t=0.0)
        a = [sample_next(empty, schema, 0.7, random.Random(5), config, 0) for _ in range(50)]
        b = [sample_next(full, schema, 0.7, random.Random(5), config, 0) for _ in range(50)]
        assert a == b


class TestExtractSolution:
    def test_shared_individual_deduplicated(self):
        schema = one_template_schema()
        archive = Archive(SearchConfig())
        ev = make_ev(schema, {T1: 1.0, T2: 1.0})
        archive.update(ev, t=0.0)
        suite = extract_solution(archive)
        assert len(suite) == 1

    def test_empty_archive_empty_suite(self):
        archive = Archive(SearchConfig())
        assert extract_solution(archive) == []

    def test_uncovered_best_included(self):
        schema = one_template_schema()
        archive = Archive(SearchConfig())
        archive.update(make_ev(schema, {T1: 1.0}, n_actions=1), t=0.0)
        weak = make_ev(schema, {B1: 0.5}, n_actions=2)
        archive.update(weak, t=0.0)
        suite = extract_solution(archive)
        assert len(suite) == 2

    def test_order_stable_by_target_name(self):
        schema = one_template_schema()
        archive = Archive(SearchConfig())
        ev_b = make_ev(schema, {TargetId("statement", "zzz"): 1.0}, n_actions=2)
        ev_a = make_ev(schema, {TargetId("statement", "aaa"): 1.0}, n_actions=1)
        archive.update(ev_b, t=0.0)
        archive.update(ev_a, t=0.0)
        suite = extract_solution(archive)
        assert suite[0] is ev_a and suite[1] is ev_b


class TestRunSearch:
    def test_zero_budget_empty_suite(self, crud_rig, tick_clock):
        schema = crud_rig.schema()
        config = SearchConfig(max_evaluations=0, seed=1)
        result = run_search(schema, crud_rig.driver, config, clock=tick_clock)
        assert result.suite == []
        assert result.stats.evaluations == 0

    def test_single_easy_target_yields_minimal_suite(self, tick_clock):
        from evorest.driver import DriverClient
        from evorest.executor import InProcessTransport
        from evorest.schema import parse_schema
        from evorest.simsut import SimService
        import json as _json

        spec = {
            "title": "one",
            "base_path": "",
            "stores": [],
            "endpoints": [
                {
                    "verb": "GET",
                    "path": "/ping",
                    "params": [],
                    "handler": [
                        {"stmt": "pong"},
                        {"respond": {"status": 200, "body": {"ok": True}}},
                    ],
                }
            ],
        }
        service = SimService(spec)
        driver = DriverClient("http://sim-sut.local", InProcessTransport(service))
        driver.start_sut()
        schema = parse_schema(_json.dumps(service.swagger_doc()))
        config = SearchConfig(max_evaluations=300, seed=3)
        result = run_search(schema, driver, config, clock=tick_clock)
        covered_stmts = [t for t in result.archive.covered if t.name == "Stmt_pong"]
        assert covered_stmts
        # the lone statement and the 2xx status target collapse onto the
        # same minimal one-call test
        assert len(result.suite) == 1
        assert result.suite[0].size == 1

    def test_three_independent_targets_need_three_tests(self, tick_clock):
        import json as _json

        from evorest.driver import DriverClient
        from evorest.executor import InProcessTransport
        from evorest.schema import parse_schema
        from evorest.simsut import SimService

        spec = {
            "title": "three",
            "base_path": "",
            "stores": [],
            "endpoints": [
                {
                    "verb": "GET",
                    "path": f"/e{i}",
                    "params": [],
                    "handler": [
                        {"stmt": f"hit_{i}"},
                        {"respond": {"status": 200, "body": {"i": i}}},
                    ],
                }
                for i in range(3)
            ],
        }
        service = SimService(spec)
        driver = DriverClient("http://sim-sut.local", InProcessTransport(service))
        driver.start_sut()
        schema = parse_schema(_json.dumps(service.swagger_doc()))
        result = run_search(
            schema, driver, SearchConfig(max_evaluations=500, seed=8), clock=tick_clock
        )
        for i in range(3):
            assert TargetId("statement", f"Stmt_hit_{i}") in result.archive.covered
        assert len(result.suite) == 3

    def test_same_seed_identical_suites(self, tick_clock):
        import json as _json

        from evorest.writer import render_neutral_json

        def one_run():
            from conftest import SimRig, TickClock

            rig = SimRig("crud-chain")
            schema = rig.schema()
            config = SearchConfig(max_evaluations=400, seed=11)
            result = run_search(schema, rig.driver, config, clock=TickClock())
            return render_neutral_json(result.suite, schema.base_path), result.stats.to_json()

        assert one_run() == one_run()

    def test_wall_clock_budget_respected(self, crud_rig):
        schema = crud_rig.schema()
        config = SearchConfig(max_time_seconds=1, seed=2)
        fake_now = {"t": 0.0}

        def clock():
            fake_now["t"] += 0.01
            return fake_now["t"]

        result = run_search(schema, crud_rig.driver, config, clock=clock)
        assert result.stats.evaluations > 0
        assert result.stats.elapsed_ms >= 1000

    def test_should_stop_interrupts(self, crud_rig, tick_clock):
        schema = crud_rig.schema()
        config = SearchConfig(max_evaluations=100000, seed=2)
        count = {"n": 0}

        def stop():
            count["n"] += 1
            return count["n"] > 50

        result = run_search(schema, crud_rig.driver, config, clock=tick_clock, should_stop=stop)
        assert result.stats.evaluations <= 51

    def test_stats_json_shape(self, crud_rig, tick_clock):
        import json as _json

        schema = crud_rig.schema()
        result = run_search(
            schema, crud_rig.driver, SearchConfig(max_evaluations=50, seed=5), clock=tick_clock
        )
        stats = _json.loads(result.stats.to_json())
        assert set(stats) == {
            "evaluations", "covered_targets", "total_targets",
            "faults_5xx", "elapsed_ms", "seed",
        }
        assert stats["evaluations"] == 50
        assert stats["seed"] == 5
