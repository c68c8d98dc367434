import numpy as np
import pytest

from icpnn.artifacts import load_bundle
from icpnn.cli import ICP_SEED_OFFSET, main
from icpnn.conformal import critical_index
from icpnn.data import Dataset, apply_scaling, fit_scaling, load_csv, save_csv, split_icp
from icpnn.regressors import predict
from oracles import brute_p_value

COMMON = ["--hidden", "3", "--restarts", "2", "--max-epochs", "40", "--patience", "8"]


def linear_truth(X):
    return 1.0 + 2.0 * X[:, 0] - X[:, 1]


@pytest.fixture
def synth_csv(tmp_path):
    rng = np.random.default_rng(0)
    X = rng.uniform(-2, 2, size=(600, 2))
    y = linear_truth(X) + 0.2 * rng.normal(size=600)
    p = tmp_path / "synth.csv"
    save_csv(Dataset(X, y), p, label_name="y")
    return p


def test_run_writes_reports(synth_csv, tmp_path, capsys):
    out = tmp_path / "res"
    code = main(["run", "--data", str(synth_csv), "--k", "2", "--repeats", "2", "--q", "99",
                 "--measure", "all", "--seed", "3", "--out", str(out)] + COMMON)
    assert code == 0
    table = capsys.readouterr().out
    assert "90%" in table and "normalized(beta=0.5)" in table and "absolute" in table
    kv = (out / "report.kv").read_text()
    assert kv.splitlines()[0] == "schema = icpnn-report/1"
    assert (out / "boxplot.csv").exists() and (out / "splits.txt").exists()


def test_run_is_byte_reproducible(synth_csv, tmp_path):
    args = ["run", "--data", str(synth_csv), "--k", "2", "--repeats", "1", "--q", "99",
            "--measure", "normalized", "--beta", "0.5", "--seed", "11"] + COMMON
    assert main(args + ["--out", str(tmp_path / "a")]) == 0
    assert main(args + ["--out", str(tmp_path / "b")]) == 0
    assert (tmp_path / "a" / "report.kv").read_bytes() == (tmp_path / "b" / "report.kv").read_bytes()


def test_run_reuses_split_file(synth_csv, tmp_path):
    base = ["run", "--data", str(synth_csv), "--k", "2", "--repeats", "1", "--q", "99", "--seed", "4"] + COMMON
    assert main(base + ["--out", str(tmp_path / "a")]) == 0
    assert main(base + ["--splits", str(tmp_path / "a" / "splits.txt"), "--out", str(tmp_path / "b")]) == 0
    assert (tmp_path / "a" / "report.kv").read_bytes() == (tmp_path / "b" / "report.kv").read_bytes()


def test_run_rejects_q_not_of_required_form(synth_csv, tmp_path, capsys):
    code = main(["run", "--data", str(synth_csv), "--k", "2", "--q", "300", "--out", str(tmp_path)] + COMMON)
    assert code == 1
    assert "100n-1" in capsys.readouterr().err


def test_run_missing_file(tmp_path, capsys):
    missing = tmp_path / "nowhere.csv"
    code = main(["run", "--data", str(missing), "--k", "2", "--q", "99", "--out", str(tmp_path)] + COMMON)
    assert code == 2
    assert str(missing) in capsys.readouterr().err


def test_usage_error_exit_code(capsys):
    with pytest.raises(SystemExit) as exc:
        main(["run", "--k", "2"])
    assert exc.value.code == 1


def _fit(synth_csv, tmp_path, measure="absolute", seed=5):
    bundle = tmp_path / f"model-{measure}"
    code = main(["fit", "--data", str(synth_csv), "--q", "99", "--measure", measure,
                 "--beta", "0.5", "--seed", str(seed), "--out", str(bundle)] + COMMON)
    assert code == 0
    return bundle


def test_fit_predict_centroid_contains_truth(synth_csv, tmp_path, capsys):
    bundle = _fit(synth_csv, tmp_path)
    ds = load_csv(synth_csv)
    centroid = ds.attributes.mean(axis=0)
    capsys.readouterr()
    code = main(["predict", "--model", str(bundle), "--x", ",".join(repr(v) for v in centroid.tolist()),
                 "--confidence", "0.95"])
    assert code == 0
    lines = capsys.readouterr().out.strip().splitlines()
    assert lines[0] == "prediction,lower,upper"
    _, lo, hi = map(float, lines[1].split(","))
    truth = linear_truth(centroid[None, :])[0]
    assert lo <= truth <= hi


@pytest.mark.parametrize("measure", ["absolute", "normalized"])
def test_predict_csv_and_bundle_round_trip(synth_csv, tmp_path, measure):
    bundle_dir = _fit(synth_csv, tmp_path, measure)
    out = tmp_path / "pred.csv"
    assert main(["predict", "--model", str(bundle_dir), "--data", str(synth_csv),
                 "--label-column", "y", "--confidence", "0.9", "--out", str(out)]) == 0
    rows = np.loadtxt(out, delimiter=",", skiprows=1)
    assert rows.shape == (600, 3)
    assert np.all(rows[:, 1] <= rows[:, 0]) and np.all(rows[:, 0] <= rows[:, 2])
    b = load_bundle(bundle_dir)
    assert b.measure.kind == measure and b.calibration.q == 99


def test_predict_wrong_feature_count(synth_csv, tmp_path, capsys):
    bundle = _fit(synth_csv, tmp_path)
    code = main(["predict", "--model", str(bundle), "--x", "1.0,2.0,3.0"])
    assert code == 2
    assert "expects 2 attributes" in capsys.readouterr().err


def test_predict_confidence_too_high_for_q(synth_csv, tmp_path, capsys):
    bundle = _fit(synth_csv, tmp_path)
    code = main(["predict", "--model", str(bundle), "--x", "0,0", "--confidence", "0.999"])
    assert code == 1
    err = capsys.readouterr().err
    assert "increase q" in err or "larger --q" in err


def test_predict_rejects_foreign_artifact(tmp_path, capsys):
    (tmp_path / "junk").mkdir()
    (tmp_path / "junk" / "manifest.txt").write_text("something-else/9\n")
    assert main(["predict", "--model", str(tmp_path / "junk"), "--x", "1,2"]) == 2


@pytest.mark.parametrize("delta", [0.1, 0.05, 0.01])
def test_predict_on_calibration_examples(synth_csv, tmp_path, delta):
    seed = 5
    bundle = load_bundle(_fit(synth_csv, tmp_path, seed=seed))
    ds = load_csv(synth_csv)
    # same seed and row count give the same calibration rows as the fit did
    _, calib_raw = split_icp(ds, 99, seed + ICP_SEED_OFFSET)
    _, lo, hi = bundle.intervals(calib_raw.attributes, delta)
    y = calib_raw.labels
    missed = int(np.sum((y < lo) | (y > hi)))
    assert missed / len(y) <= delta

    # oracle: a calibration example is excluded exactly when its own score has p-value <= delta
    scaled = apply_scaling(fit_scaling(ds), calib_raw)
    scores = np.abs(y - predict(bundle.regressor, scaled.attributes))
    excluded = sum(brute_p_value(a, scores) <= delta for a in scores)
    assert missed == excluded
    assert excluded < critical_index(delta, 99)
