import json

import numpy as np
import pytest

from gpnet.cli import main
from gpnet.data import GraphDataset, Split, save_bundle


@pytest.fixture(scope="module")
def bundle(tmp_path_factory):
    rng = np.random.default_rng(11)
    per, classes = 8, 3
    n = per * classes
    y = np.repeat(np.arange(classes), per)
    edges = []
    for c in range(classes):
        nodes = np.flatnonzero(y == c)
        edges.extend((int(u), int(v)) for i, u in enumerate(nodes) for v in nodes[i + 1 :])
    X = rng.normal(scale=0.25, size=(n, classes + 1)).astype(np.float32).astype(np.float64)
    X[np.arange(n), y] += 2.0
    train, val, test = [], [], []
    for c in range(classes):
        nodes = rng.permutation(np.flatnonzero(y == c))
        train.extend(nodes[:4])
        val.extend(nodes[4:6])
        test.extend(nodes[6:])
    ds = GraphDataset(
        name="cli-cliques", X=X, labels=y, edges=np.array(edges),
        splits=(Split(np.array(train), np.array(val), np.array(test)),),
        num_classes=classes,
    )
    path = tmp_path_factory.mktemp("bundle")
    save_bundle(ds, path)
    return path


@pytest.fixture(autouse=True)
def isolated_cache(tmp_path, monkeypatch):
    monkeypatch.setenv("GPNET_CACHE_DIR", str(tmp_path / "cache"))
    return tmp_path / "cache"


def test_validate_bundle(bundle, capsys):
    assert main(["validate-bundle", "--dataset", str(bundle)]) == 0
    out = capsys.readouterr().out
    assert "nodes: 24" in out
    assert "classes: 3" in out
    assert "OK" in out


def test_validate_missing_bundle_exits_2(tmp_path, capsys):
    assert main(["validate-bundle", "--dataset", str(tmp_path / "nope")]) == 2
    assert "missing" in capsys.readouterr().err


def test_no_subcommand_is_usage_error(capsys):
    assert main([]) == 1


def test_unknown_flag_is_usage_error(bundle, capsys):
    assert main(["train", "--dataset", str(bundle), "--bogus"]) == 1


def test_precompute_then_cache_hit(bundle, isolated_cache, capsys):
    assert main(["precompute", "--dataset", str(bundle), "--k", "2"]) == 0
    first = capsys.readouterr().out
    assert "propagated 24x4" in first
    assert len(list(isolated_cache.iterdir())) == 1
    assert main(["precompute", "--dataset", str(bundle), "--k", "2"]) == 0
    assert "cache hit" in capsys.readouterr().out
    assert len(list(isolated_cache.iterdir())) == 1


def test_env_cache_dir_overrides_flag(bundle, isolated_cache, tmp_path):
    flag_dir = tmp_path / "flagged"
    assert main(["precompute", "--dataset", str(bundle), "--cache-dir", str(flag_dir)]) == 0
    assert not flag_dir.exists()
    assert len(list(isolated_cache.iterdir())) == 1


def test_invalid_q_flag_cites_constraint(bundle, capsys):
    assert main(["precompute", "--dataset", str(bundle), "--q", "0"]) == 1
    assert ">= 1" in capsys.readouterr().err


def test_train_writes_versioned_metrics(bundle, tmp_path, capsys):
    out = tmp_path / "metrics.json"
    code = main([
        "train", "--dataset", str(bundle), "--epochs", "60", "--lr", "0.1",
        "--runs", "2", "--out", str(out),
    ])
    assert code == 0
    stdout = capsys.readouterr().out
    assert "test mean over runs" in stdout
    payload = json.loads(out.read_text())
    assert payload["schema_version"] == 1
    assert payload["dataset"] == "cli-cliques"
    assert payload["filter"]["k"] == 2
    assert payload["training"]["runs"] == 2
    assert len(payload["metrics"]["run_test_accuracies"]) == 2
    assert 0.0 <= payload["metrics"]["accuracy"]["test"] <= 1.0


def test_train_seed_fixed_rerun_identical(bundle, tmp_path):
    args = ["train", "--dataset", str(bundle), "--epochs", "40", "--lr", "0.1",
            "--runs", "2", "--seed", "5", "--dropout", "0.3"]
    a, b = tmp_path / "a.json", tmp_path / "b.json"
    assert main(args + ["--out", str(a)]) == 0
    assert main(args + ["--out", str(b)]) == 0
    assert json.loads(a.read_text())["metrics"] == json.loads(b.read_text())["metrics"]


def test_train_second_invocation_uses_cache(bundle, capsys):
    args = ["train", "--dataset", str(bundle), "--epochs", "10", "--runs", "1"]
    assert main(args) == 0
    capsys.readouterr()
    assert main(args) == 0
    assert "using cached propagation" in capsys.readouterr().out


def test_corrupt_bundle_exits_2(bundle, tmp_path, capsys):
    import shutil

    broken = tmp_path / "broken"
    shutil.copytree(bundle, broken)
    (broken / "labels.bin").write_bytes(b"\x00")
    assert main(["train", "--dataset", str(broken)]) == 2


def test_sweep_cli_end_to_end(bundle, tmp_path, capsys):
    grid = tmp_path / "grid.json"
    grid.write_text(json.dumps({
        "m": [1], "q": [[1]], "d": [[0]], "k": [2, 3],
        "lr": [0.1], "dropout": [0.0], "weight_decay": [0.0], "epochs": [40],
    }))
    out = tmp_path / "results.csv"
    code = main([
        "sweep", "--dataset", str(bundle), "--grid", str(grid),
        "--runs", "1", "--out", str(out),
    ])
    assert code == 0
    stdout = capsys.readouterr().out
    assert "swept 2 configurations" in stdout
    assert "best:" in stdout
    assert out.read_text().count("\n") == 3


def test_sweep_large_grid_needs_flag(bundle, tmp_path, capsys):
    grid = tmp_path / "grid.json"
    grid.write_text(json.dumps({
        "m": [1], "q": [[1]], "d": [[0]], "k": [2],
        "lr": [0.1], "dropout": [0.0],
        "weight_decay": list(np.linspace(0, 1e-4, 60)),
        "epochs": [10, 20, 30, 40, 50, 60, 70, 80, 90],
    }))
    code = main(["sweep", "--dataset", str(bundle), "--grid", str(grid), "--out",
                 str(tmp_path / "r.csv")])
    assert code == 1
    assert "--allow-large" in capsys.readouterr().err


def test_sweep_missing_grid_file(bundle, capsys):
    assert main(["sweep", "--dataset", str(bundle), "--grid", "/no/such.json"]) == 1


def test_spectrum_to_file_and_stdout(bundle, tmp_path, capsys):
    out = tmp_path / "spec.csv"
    assert main(["spectrum", "--dataset", str(bundle), "--k", "2", "--out", str(out)]) == 0
    assert "filter class" in capsys.readouterr().out
    lines = out.read_text().strip().splitlines()
    assert lines[0] == "lambda,channel,response"
    assert len(lines) == 1 + 24 * 2  # per eigenvalue: channel 0 + aggregate
    assert main(["spectrum", "--dataset", str(bundle), "--k", "2"]) == 0
    assert capsys.readouterr().out.startswith("lambda,channel,response")


def test_bench_reports_three_models_and_ratio(bundle, tmp_path, capsys):
    out = tmp_path / "bench.json"
    code = main([
        "bench", "--dataset", str(bundle), "--epochs", "100",
        "--lr", "0.1", "--out", str(out),
    ])
    assert code == 0
    stdout = capsys.readouterr().out
    for name in ("gpnet:", "sgc-reduction:", "mlp-reduction:"):
        assert name in stdout
    assert "ratio" in stdout
    payload = json.loads(out.read_text())
    assert payload["schema_version"] == 1
    assert len(payload["rows"]) == 3
    assert payload["gpnet_sgc_ratio"] > 0
