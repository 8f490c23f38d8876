import warnings

import pytest

with warnings.catch_warnings():
    warnings.simplefilter("ignore", DeprecationWarning)
    from fastapi.testclient import TestClient

from nbselect import __version__
from nbselect.service import app

TOY_CSV = "a,b,cls\nx,1.0,yes\ny,2.0,no\nx,10.5,yes\ny,11.0,no\nx,1.5,yes\ny,2.5,no\n"


@pytest.fixture(scope="module")
def client():
    with TestClient(app, raise_server_exceptions=False) as c:
        yield c


@pytest.fixture()
def toy_path(tmp_path):
    path = tmp_path / "toy.csv"
    path.write_text(TOY_CSV, encoding="utf-8")
    return str(path)


def _source(toy_path=None):
    if toy_path:
        return {"path": toy_path, "class_column": "cls", "bins": 2}
    return {"csv_text": TOY_CSV, "class_column": "cls", "bins": 2}


class TestVersion:
    def test_reports_name_and_version(self, client):
        body = client.get("/version").json()
        assert body == {"name": "nbselect", "version": __version__}


class TestDiscretize:
    def test_inline_csv(self, client):
        resp = client.post("/discretize", json={"data": _source()})
        assert resp.status_code == 200
        body = resp.json()
        assert body["n_rows"] == 6
        kinds = {c["name"]: c["kind"] for c in body["columns"]}
        assert kinds == {"a": "discrete", "b": "continuous", "cls": "discrete"}
        assert body["csv_text"].startswith("a,b,cls\n")
        assert body["tool"]["version"] == __version__

    def test_path_source(self, client, toy_path):
        resp = client.post("/discretize", json={"data": _source(toy_path)})
        assert resp.status_code == 200

    def test_both_sources_rejected(self, client, toy_path):
        bad = {"path": toy_path, "csv_text": TOY_CSV, "class_column": "cls"}
        resp = client.post("/discretize", json={"data": bad})
        assert resp.status_code == 422

    def test_missing_file_is_a_data_error(self, client):
        resp = client.post("/discretize", json={"data": {"path": "/nope.csv", "class_column": "c"}})
        assert resp.status_code == 400

    def test_absent_class_column(self, client):
        resp = client.post("/discretize", json={"data": {"csv_text": TOY_CSV, "class_column": "zzz"}})
        assert resp.status_code == 400
        assert "absent" in resp.json()["detail"]


class TestScore:
    def test_structure_by_integer(self, client):
        resp = client.post("/score", json={
            "data": _source(), "options": {"criterion": "uevi"}, "structure": "3",
        })
        assert resp.status_code == 200
        body = resp.json()
        assert body["criterion"] == "uevi"
        assert body["structure"]["mask"] == 3
        assert body["structure"]["features"] == ["a", "b"]
        assert isinstance(body["structure"]["score"], float)

    def test_structure_by_names(self, client):
        resp = client.post("/score", json={
            "data": _source(), "options": {"criterion": "bic"}, "structure": "b",
        })
        assert resp.status_code == 200
        assert resp.json()["structure"]["mask"] == 2

    def test_unknown_criterion_names_valid_set(self, client):
        resp = client.post("/score", json={
            "data": _source(), "options": {"criterion": "zzz"}, "structure": "0",
        })
        assert resp.status_code == 422
        assert "valid criteria" in resp.json()["detail"]

    def test_bad_structure_is_usage_error(self, client):
        resp = client.post("/score", json={
            "data": _source(), "options": {"criterion": "uevi"}, "structure": "a,zz",
        })
        assert resp.status_code == 422


class TestSelect:
    def test_select_response_shape(self, client):
        resp = client.post("/select", json={
            "data": _source(), "options": {"criterion": "preq", "seed": 42}, "top": 3,
        })
        assert resp.status_code == 200
        body = resp.json()
        assert body["criterion"] == "preq"
        assert body["n_structures"] == 4
        assert len(body["table_top"]) == 3
        assert body["config"]["criterion"]["seed"] == 42
        assert body["table_csv"] is None
        # top entries sorted by descending score
        scores = [e["score"] for e in body["table_top"]]
        assert scores == sorted(scores, reverse=True)
        assert body["best"]["score"] == scores[0]

    def test_table_csv_on_request(self, client):
        resp = client.post("/select", json={
            "data": _source(), "options": {"criterion": "uevi"}, "include_table_csv": True,
        })
        text = resp.json()["table_csv"]
        assert text.splitlines()[0] == "structure_mask,structure_names,score"
        assert len(text.strip().splitlines()) == 5


class TestExperiment:
    def test_end_to_end(self, client):
        resp = client.post("/experiment", json={
            "data": _source(),
            "criteria": ["uevi", "preq"],
            "repetitions": 2,
            "sample_size": None,
            "seed": 5,
        })
        assert resp.status_code == 200
        body = resp.json()
        assert set(body["aggregates"]) == {"uevi", "preq", "baseline", "oracle"}
        assert len(body["repetitions"]) == 2
        assert body["config"]["data"] is None  # inline source has no path
        assert body["config"]["class_column"] == "cls"

    def test_empty_criteria_rejected(self, client):
        resp = client.post("/experiment", json={
            "data": _source(), "criteria": [], "repetitions": 1,
        })
        assert resp.status_code == 422

    def test_deterministic_across_calls(self, client):
        payload = {
            "data": _source(), "criteria": ["uevi"], "repetitions": 2,
            "sample_size": 4, "seed": 9,
        }
        a = client.post("/experiment", json=payload).json()
        b = client.post("/experiment", json=payload).json()
        assert a == b


class TestCompare:
    def test_averages_gains(self, client):
        reports = []
        for seed in (1, 2):
            reports.append(client.post("/experiment", json={
                "data": _source(), "criteria": ["uevi"], "repetitions": 1,
                "sample_size": None, "seed": seed,
            }).json())
        resp = client.post("/compare", json={"reports": reports})
        assert resp.status_code == 200
        body = resp.json()
        assert body["n_reports"] == 2
        assert "uevi" in body["criteria"]
