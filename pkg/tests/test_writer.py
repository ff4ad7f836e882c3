import json
import re

import pytest

from evorest.apimodel import ActionTemplate, ParamSpec, PathSegment
from evorest.fitness import EvaluatedIndividual, ExecutionResult, FitnessValue
from evorest.genome import (
    BooleanGene,
    IntGene,
    Individual,
    ObjectGene,
    ResourceLinkGene,
    RestAction,
    StringGene,
)
from evorest.httpcall import AuthCredential
from evorest.writer import (
    OutputFormat,
    read_neutral_suite,
    render_java,
    render_neutral_json,
    write_suite,
)


def chained_suite():
    """POST /items then DELETE /items/{id} linked to it, plus a 500 test."""
    create = ActionTemplate(
        verb="POST",
        path=(PathSegment(literal="items"),),
        body_spec=ParamSpec(
            name="body", kind="object",
            fields=(ParamSpec(name="name", kind="string"),),
        ),
        produces_location=True,
    )
    delete = ActionTemplate(
        verb="DELETE",
        path=(PathSegment(literal="items"), PathSegment(placeholder="id")),
        path_params=(ParamSpec(name="id", kind="int64"),),
    )
    chained = Individual(
        (
            RestAction(create, (ObjectGene((("name", StringGene("JIg")),)),)),
            RestAction(delete, (IntGene(-324163273),), ResourceLinkGene(0, "/api/items")),
        ),
        auth_index=0,
    )
    ev_chain = EvaluatedIndividual(
        chained,
        FitnessValue({}),
        [
            ExecutionResult(status=200, extracted_location="/api/items/1"),
            ExecutionResult(status=204),
        ],
    )
    faulty = Individual(
        (RestAction(create, (ObjectGene((("name", StringGene("x")),)),)),), None
    )
    ev_fault = EvaluatedIndividual(faulty, FitnessValue({}), [ExecutionResult(status=500)])
    return [ev_chain, ev_fault]


CREDS = (AuthCredential("administrator", [("Authorization", "ApiKey administrator")]),)


class TestNeutralJson:
    def test_round_trip(self):
        suite = chained_suite()
        text = render_neutral_json(suite, "/api", CREDS)
        parsed = read_neutral_suite(text)
        assert len(parsed) == 2
        verbs = [[c["verb"] for c in t] for t in parsed]
        assert verbs == [["POST", "DELETE"], ["POST"]]
        assert parsed[0][1]["link"] == {"from_test_call_index": 0}
        assert parsed[0][0]["expected_status"] == 200
        assert parsed[0][1]["expected_status"] == 204
        assert parsed[1][0]["expected_status"] == 500
        assert json.loads(parsed[0][0]["body"]) == {"name": "JIg"}
        assert parsed[0][0]["path"] == "/api/items"

    def test_auth_headers_embedded(self):
        text = render_neutral_json(chained_suite(), "/api", CREDS)
        parsed = read_neutral_suite(text)
        assert {"name": "Authorization", "value": "ApiKey administrator"} in parsed[0][0]["headers"]
        assert parsed[1][0]["headers"] == []

    def test_empty_suite_is_valid_json(self):
        assert read_neutral_suite(render_neutral_json([])) == []

    def test_deterministic_bytes(self):
        suite = chained_suite()
        assert render_neutral_json(suite, "/api", CREDS) == render_neutral_json(suite, "/api", CREDS)

    def test_rejects_non_array(self):
        with pytest.raises(ValueError):
            read_neutral_suite('{"not": "a suite"}')

    def test_golden_shape(self):
        text = render_neutral_json(chained_suite(), "/api", CREDS)
        parsed = json.loads(text)
        assert set(parsed[0][0]) == {"verb", "path", "query", "headers", "body", "expected_status"}
        assert set(parsed[0][1]) == {
            "verb", "path", "query", "headers", "body", "expected_status", "link",
        }


def _assert_balanced(text):
    for open_ch, close_ch in (("(", ")"), ("{", "}")):
        depth = 0
        for ch in text:
            if ch == open_ch:
                depth += 1
            elif ch == close_ch:
                depth -= 1
            assert depth >= 0
        assert depth == 0


class TestJava:
    def test_balanced_and_one_assertion_chain_per_action(self):
        suite = chained_suite()
        text = render_java(suite, "T", junit5=False, base_path="/api", credentials=CREDS)
        _assert_balanced(text)
        methods = text.split("@Test")[1:]
        actions_per_test = [2, 1]
        for method, expected in zip(methods, actions_per_test):
            assert method.count(".then()") == expected

    def test_chained_location_variable_and_resolve_call(self):
        text = render_java(chained_suite(), "T", junit5=False, base_path="/api", credentials=CREDS)
        assert 'String location_items_0 = "";' in text
        assert '.extract().body().path("id").toString();' in text
        assert 'location_items_0 = "/api/items/" + id_0;' in text
        assert re.search(r"resolveLocation\(location_items_0, baseUrlOfSut \+ \"/api/items/-324163273\"\)", text)
        assert ".statusCode(204);" in text

    def test_fault_comment_present(self):
        text = render_java(chained_suite(), "T", junit5=False, base_path="/api", credentials=CREDS)
        assert "// fault: a server error (5xx) was observed" in text

    def test_auth_header_emitted(self):
        text = render_java(chained_suite(), "T", junit5=False, base_path="/api", credentials=CREDS)
        assert '.header("Authorization", "ApiKey administrator")' in text

    def test_junit4_vs_junit5_imports(self):
        suite = chained_suite()
        j4 = render_java(suite, "T", junit5=False)
        j5 = render_java(suite, "T", junit5=True)
        assert "import org.junit.Test;" in j4
        assert "import org.junit.jupiter.api.Test;" in j5

    def test_empty_suite_valid_file_with_header(self):
        text = render_java([], "Empty", junit5=False)
        _assert_balanced(text)
        assert text.startswith("/*")
        assert "public class Empty" in text
        assert "@Test" not in text

    def test_body_string_escaped(self):
        text = render_java(chained_suite(), "T", junit5=False, base_path="/api", credentials=CREDS)
        assert '.body("{\\"name\\":\\"JIg\\"}")' in text


class TestWriteSuite:
    def test_writes_named_files(self, tmp_path):
        suite = chained_suite()
        paths = write_suite(suite, OutputFormat.NEUTRAL_JSON, tmp_path, "MySuite", "/api", CREDS)
        assert paths == [tmp_path / "MySuite.json"]
        assert paths[0].exists()
        paths = write_suite(suite, OutputFormat.JAVA_JUNIT_5, tmp_path, "MySuite", "/api", CREDS)
        assert paths == [tmp_path / "MySuite.java"]
        assert "jupiter" in paths[0].read_text()

    def test_unwritable_folder_fails_before_partial_output(self, tmp_path):
        target = tmp_path / "blocked"
        target.write_text("a file, not a folder")
        with pytest.raises(OSError):
            write_suite(chained_suite(), OutputFormat.NEUTRAL_JSON, target, "S")
        assert target.read_text() == "a file, not a folder"

    def test_empty_suite_produces_file(self, tmp_path):
        paths = write_suite([], OutputFormat.JAVA_JUNIT_4, tmp_path, "Empty")
        assert paths[0].read_text().startswith("/*")
        paths = write_suite([], OutputFormat.NEUTRAL_JSON, tmp_path, "Empty")
        assert json.loads(paths[0].read_text()) == []
