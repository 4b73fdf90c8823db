import json
import random

import pytest

import earlyrisk

HEADER = [
    "Age", "Gender", "Polyuria", "Polydipsia", "sudden weight loss", "weakness", "Polyphagia",
    "Genital thrush", "visual blurring", "Itching", "Irritability", "delayed healing",
    "partial paresis", "muscle stiffness", "Alopecia", "Obesity", "class",
]


def write_csv(path, rows=120, seed=1):
    rng = random.Random(seed)
    lines = [",".join(HEADER)]
    for i in range(rows):
        positive = i % 5 < 3
        cells = [str(rng.randint(25, 80)), "Female" if rng.random() < (0.5 if positive else 0.1) else "Male"]
        for _ in HEADER[2:-1]:
            cells.append("Yes" if rng.random() < (0.6 if positive else 0.2) else "No")
        cells.append("Positive" if positive else "Negative")
        lines.append(",".join(cells))
    path.write_text("\n".join(lines) + "\n")
    return path


def test_version_and_names():
    assert earlyrisk.__version__ == earlyrisk.version()
    names = earlyrisk.model_names()
    assert len(names) == 11
    assert "dnet" in names and "lr" in names


def test_metrics_and_schedule():
    m = earlyrisk.metrics(36, 4, 1, 63)
    assert round(m["accuracy"], 4) == 0.9519
    assert round(m["f1"], 4) == 0.9618
    assert earlyrisk.lr_at(0) == 0.01
    assert earlyrisk.lr_at(2) == 0.0081


def test_roc_auc():
    points, auc = earlyrisk.roc_auc([0.9, 0.8, 0.2, 0.1], [1, 1, 0, 0])
    assert auc == 1.0
    assert points[0][:2] == (0.0, 0.0)
    with pytest.raises(earlyrisk.EarlyriskError):
        earlyrisk.roc_auc([0.1, 0.2], [1, 1])


def test_dataset_rules_and_models(tmp_path):
    ds = earlyrisk.load_dataset(write_csv(tmp_path / "data.csv"))
    assert len(ds) == 120
    assert len(ds.feature_names) == 16
    rules = earlyrisk.mine_rules(ds, 0.2, 0.8)
    for r in rules:
        assert r["confidence"] >= 0.8
        assert r["support"] >= 0.2
    model = earlyrisk.fit("lr", ds.features, ds.target)
    assert model.name == "lr"
    scores = model.score(ds.features)
    assert all(0.0 <= s <= 1.0 for s in scores)
    with pytest.raises(earlyrisk.EarlyriskError):
        earlyrisk.fit("nope", ds.features, ds.target)


def test_run_pipeline(tmp_path):
    data = write_csv(tmp_path / "data.csv", rows=100)
    config = json.dumps({"schema_version": 1, "cv_folds": 4, "selection": {"importance_trees": 20}})
    manifest = earlyrisk.run(config, data=data, out=tmp_path / "out", models=["lr", "gnb"])
    assert list(manifest["stages"]) == ["ingest", "mine", "select", "train", "cv", "eval", "report"]
    assert manifest["outputs"]["metrics.csv"].startswith("fnv1a64:")
    assert (tmp_path / "out" / "report.md").exists()
    lines = (tmp_path / "out" / "metrics.csv").read_text().splitlines()
    assert [line.split(",")[0] for line in lines[1:]] == ["lr", "gnb"]
