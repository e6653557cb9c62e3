import json

import pytest

from qegraphs.cli import main
from qegraphs.graph_core import cycle_graph, random_regular, read_edge_list, write_edge_list


def run(tmp_path, *args, sub="run"):
    out = tmp_path / sub
    code = main([*args, "--out", str(out), "--force"])
    return code, out


def load(out, name="result.json"):
    return json.loads((out / name).read_text())


def test_product_c4_run(tmp_path):
    code, out = run(tmp_path, "theorem2", "--n", "50", "--d", "3", "--seed", "1")
    assert code == 0
    res = load(out)
    assert abs(res["result"]["report"]["statistic"] - 0.5) <= 1e-9
    assert res["result"]["bst_profile_R2"] == 1.0
    assert len(res["result"]["report"]["diagonal_terms"]) == 200
    assert load(out, "config.json")["n"] == 50


def test_product_c4_run_deterministic(tmp_path):
    _, a = run(tmp_path, "theorem2", "--n", "30", sub="a")
    _, b = run(tmp_path, "theorem2", "--n", "30", sub="b")
    ra, rb = load(a), load(b)
    for r in (ra, rb):
        r.pop("timestamp")
        r["config"].pop("out")
    assert json.dumps(ra, sort_keys=True) == json.dumps(rb, sort_keys=True)


def test_hub_run(tmp_path):
    code, out = run(tmp_path, "theorem4", "--n", "100", "--d", "8", "--seed", "2")
    assert code == 0
    r = load(out)["result"]
    assert r["report"]["statistic"] >= 100 / 401 - 1e-9
    assert r["exp"]["lambda2"] >= 7.68
    assert r["rho_violations"] == [] and r["rho_samples"] == 400


def test_hub_run_edge_override(tmp_path):
    u, v = random_regular(40, 8, 0).edges()[7]
    code, out = run(tmp_path, "theorem4", "--n", "40", "--d", "8", "--edge", str(u), str(v), "--seed", "0")
    assert code == 0
    assert load(out)["result"]["deleted_edge"] == [u, v]
    missing = next((0, w) for w in range(1, 40) if not random_regular(40, 8, 0).has_edge(0, w))
    code, out = run(tmp_path, "theorem4", "--n", "40", "--d", "8", "--edge", *map(str, missing), sub="bad")
    assert code == 2 and "not in graph" in load(out, "error.json")["message"]


def test_green_verify(tmp_path):
    code, out = run(tmp_path, "green-verify", "--trials", "20", "--d", "3")
    assert code == 0
    r = load(out)["result"]
    assert r["product_formula"]["max_discrepancy"] <= 1e-8
    assert len(r["product_formula"]["cases"]) == 21
    assert r["tree_diagonal_d3_z_i"] == pytest.approx([0.0, 0.4], abs=1e-10)
    assert r["sweep"]["max_im"] <= r["sweep"]["triangle_bound"]


def test_density(tmp_path):
    code, out = run(tmp_path, "density", "--d", "5", "--fiber", "c4", "--grid-points", "600", "--format", "svg")
    assert code == 0
    r = load(out)["result"]
    assert r["support"] == [-6.0, 6.0] and abs(r["integral"] - 1) <= 1e-6
    lines = (out / "density.csv").read_text().splitlines()
    assert lines[0] == "lambda,density" and len(lines) == 601
    rows = [tuple(map(float, ln.split(","))) for ln in lines[1:]]
    assert all(abs(a - b) <= 1e-12 for (_, a), (_, b) in zip(rows, rows[::-1]))
    assert (out / "density.svg").read_text().startswith("<svg")


def test_density_point_fiber(tmp_path):
    code, out = run(tmp_path, "density", "--d", "5", "--fiber", "point", "--grid-points", "101")
    assert code == 0
    assert load(out)["result"]["support"] == [-4.0, 4.0]


def test_bslimit(tmp_path):
    code, out = run(tmp_path, "bslimit", "--n", "50", "--d", "3", "--radius", "2")
    assert code == 0
    rows = load(out)["result"]["trend"]
    assert [r["n"] for r in rows] == [50, 100, 200]
    for r in rows:
        assert r["distance"] <= r["bst_profile"] + 1e-12


def test_bslimit_point_fiber(tmp_path):
    code, out = run(tmp_path, "bslimit", "--n", "40", "--fiber", "point", "--radius", "2")
    assert code == 0
    for r in load(out)["result"]["trend"]:
        assert r["distance"] == pytest.approx(r["bst_profile"], abs=1e-12)


def test_bslimit_cycle_base(tmp_path):
    code, out = run(tmp_path, "bslimit", "--n", "100", "--base", "cycle", "--radius", "1")
    assert code == 0
    assert all(r["distance"] == 0 for r in load(out)["result"]["trend"])


def test_generate_and_spectrum(tmp_path):
    code, out = run(tmp_path, "generate", "--family", "product-c4", "--n", "10", "--d", "3", sub="g")
    assert code == 0
    g = read_edge_list((out / "graph.txt").read_text())
    assert g.n == 40 and g.regularity() == 5
    path = tmp_path / "c4.txt"
    path.write_text(write_edge_list(cycle_graph(4)))
    code, out = run(tmp_path, "spectrum", "--graph", str(path), "--format", "csv", sub="s")
    assert code == 0
    spec = json.loads((out / "spectrum.json").read_text())
    assert spec["eigenvalues"] == pytest.approx([-2, 0, 0, 2], abs=1e-12)
    assert len((out / "vectors.csv").read_text().splitlines()) == 4


def test_timestamped_dirs(tmp_path):
    assert main(["generate", "--family", "cycle", "--n", "5", "--out", str(tmp_path)]) == 0
    assert main(["generate", "--family", "cycle", "--n", "5", "--out", str(tmp_path)]) == 0
    assert len(list(tmp_path.iterdir())) == 2


@pytest.mark.parametrize("args,code", [
    (["theorem4", "--d", "6"], 2),
    (["theorem2", "--n", "51", "--d", "3"], 2),
    (["density", "--z-im-min", "0"], 2),
    (["bslimit", "--radius", "4"], 4),
])
def test_failure_exit_codes(tmp_path, capsys, args, code):
    assert main([*args, "--out", str(tmp_path)]) == code
    err = json.loads(capsys.readouterr().err)
    assert err["exit_code"] == code
