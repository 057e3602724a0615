import pytest
from fastapi.testclient import TestClient

from app.api.endpoints import checks
from app.api.services.quiver import quiver_to_json
from app.main import app


@pytest.fixture
def client(monkeypatch, store):
    monkeypatch.setattr(checks, "report_store", store)
    return TestClient(app)


def test_health(client):
    response = client.get("/")
    assert response.status_code == 200
    assert response.json()["status"] == "healthy"


def test_catalogue_listing(client):
    families = [entry["family"] for entry in client.get("/api/quivers/catalogue").json()]
    assert "X0" in families and "GrBlockDual" in families


def test_catalogue_quiver(client):
    response = client.get("/api/quivers/catalogue/Z2", params={"ranks": "2,2,3,4"})
    assert response.status_code == 200
    body = response.json()
    assert body["meta"]["family"] == "Z2"
    assert len(body["potential"]) == 1


def test_catalogue_unknown_family(client):
    assert client.get("/api/quivers/catalogue/Y7", params={"ranks": "1"}).status_code == 404


def test_catalogue_bad_ranks_is_a_400(client):
    response = client.get("/api/quivers/catalogue/X0", params={"ranks": "2,2,3,5"})
    assert response.status_code == 400
    assert response.json()["code"] == "RANK_CONSTRAINT"


def test_mutate(client, d3):
    response = client.post("/api/quivers/mutate", json={"quiver": quiver_to_json(d3), "sequence": [3, 1]})
    assert response.status_code == 200
    steps = response.json()["steps"]
    assert [s["node"] for s in steps] == [3, 1]
    assert steps[0]["kahler_map"]["expressions"][2] == "q3 = q3^-1"
    assert steps[1]["quiver"]["meta"]["family"] == "Z2"
    assert steps[1]["mutation"]["annihilated"]


def test_mutate_framed_node_is_a_400(client, d3):
    response = client.post("/api/quivers/mutate", json={"quiver": quiver_to_json(d3), "sequence": [4]})
    assert response.status_code == 400
    assert response.json()["code"] == "FRAMED_NODE"


def test_mutate_rejects_an_empty_sequence(client, d3):
    assert client.post("/api/quivers/mutate", json={"quiver": quiver_to_json(d3), "sequence": []}).status_code == 422


def test_fixed_points(client):
    body = client.get("/api/fixed-points/GrBlock", params={"ranks": "2,4,0"}).json()
    assert len(body["points"]) == 6
    assert body["distinguished"] == [[1, 2]]
    assert body["cardinality"]["ok"]


def test_ifunction(client):
    response = client.post("/api/ifunctions/GrBlock", json={"ranks": [1, 2, 0], "subsets": [[1]], "box": 1})
    assert response.status_code == 200
    assert len(response.json()["series"]["terms"]) == 2


def test_ifunction_point_out_of_range(client):
    response = client.post("/api/ifunctions/GrBlock", json={"ranks": [1, 2, 0], "point": 9})
    assert response.status_code == 400
    assert response.json()["code"] == "USAGE"


def test_check_and_summary(client, store):
    response = client.post(
        "/api/checks", json={"identity": "building-block", "ranks": [1, 2, 0], "box": 2, "trials": 1}
    )
    assert response.status_code == 200
    body = response.json()
    assert body["name"] == "building-block_1-2-0"
    assert body["report"]["verdict"] == "PASS"

    assert client.get("/api/checks/reports").json() == ["building-block_1-2-0"]
    assert client.get("/api/checks/reports/building-block_1-2-0").json()["verdict"] == "PASS"
    assert client.get("/api/checks/reports/nothing").status_code == 404

    summary = client.get("/api/checks/summary").json()
    assert summary["total"] == 1
    assert summary["passed"] == 1
    assert summary["checks"][0]["identity"] == "building-block"

    pdf = client.get("/api/checks/summary.pdf")
    assert pdf.status_code == 200
    assert pdf.headers["content-type"] == "application/pdf"
    assert pdf.content.startswith(b"%PDF")


def test_empty_summary(client):
    summary = client.get("/api/checks/summary").json()
    assert summary["total"] == 0
    assert summary["checks"] == []


def test_check_usage_error(client):
    response = client.post("/api/checks", json={"identity": "building-block", "ranks": [2, 2, 0]})
    assert response.status_code == 400
    assert response.json()["code"] == "RANK_CONSTRAINT"
