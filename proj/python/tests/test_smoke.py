import json
import math

import numpy as np
import pytest

import svr

ARC = (
    "curve.kind = arc\ncurve.d = 4\ncurve.kappa = 0.2\ncurve.length = 10\n"
    "link.kind = exp\nsigma_gamma = 0.5\nsigma_zeta = 0.03\n"
)


def test_curve_info_matches_geometry():
    line = svr.curve_info("line", 5, length=3.0)
    assert line["reach"] is None
    assert line["len"] == pytest.approx(3.0)
    arc = svr.curve_info("arc", 3, kappa=0.4, length=5.0)
    assert arc["reach"] == pytest.approx(2.5, rel=1e-2)
    helix = svr.curve_info("meyer-helix", 5, normalize_reach=math.sqrt(5), grid=3000)
    assert helix["reach"] == pytest.approx(math.sqrt(5), rel=0.02)
    with pytest.raises(ValueError):
        svr.curve_info("spiral", 3)


def test_sample_fit_predict_round_trip():
    model = svr.Model(ARC)
    assert model.d == 4
    X, Y, t = model.sample(4000, 7)
    assert X.shape == (4000, 4) and Y.shape == (4000,) and t.shape == (4000,)
    X2, _, _ = model.sample(4000, 7)
    assert np.array_equal(X, X2)

    est = svr.Estimator.fit(X, Y, l=10, j=2, m=1)
    pred = est.predict(X)
    assert pred.shape == (4000,)
    assert np.mean((pred - Y) ** 2) < np.var(Y)
    assert all(0 <= h < est.l for h in est.assign(X[:50]))

    restored = svr.Estimator.from_json(est.to_json())
    assert np.array_equal(restored.predict(X), pred)
    assert json.loads(est.to_json())["version"] >= 1


def test_unknown_model_key_rejected():
    with pytest.raises(ValueError):
        svr.Model(ARC + "sigma_gama = 1\n")


def test_tune_regimes():
    sel = svr.tune(ARC + "abs.gamma_f = 1e-6\n", 100000, "noisy")
    assert sel.l >= 1 and sel.j >= 1
    assert sel.regime.startswith("noisy")
    assert svr.tune(ARC, 1, "wide").regime == "wide"


def test_experiment_csv_schema(tmp_path):
    cfg = ARC + "n_grid = 1000, 2000\nreps = 1\nparam_strategy = fixed\nfit.l = 8\noracle_n = 5000\ntimings = false\n"
    out = tmp_path / "results.csv"
    svr.write_experiment_csv(cfg, str(out))
    assert out.read_text().splitlines()[0] == svr.METRICS_HEADER == ",".join(svr.METRICS_COLUMNS)

    rows = svr.read_metrics_csv(str(out))
    assert [r["n"] for r in rows] == [1000, 2000]
    direct = svr.run_experiment(cfg)
    for parsed, live in zip(rows, direct):
        for key, value in live.items():
            if isinstance(value, float):
                assert parsed[key] == pytest.approx(value, rel=1e-10, abs=1e-300)
            else:
                assert parsed[key] == value
    assert all(not r["failed"] for r in rows)


def test_metrics_reader_rejects_bad_files(tmp_path):
    bad = tmp_path / "bad.csv"
    bad.write_text("n,mse\n1,2\n")
    with pytest.raises(ValueError):
        svr.read_metrics_csv(str(bad))
    short = tmp_path / "short.csv"
    short.write_text(svr.METRICS_HEADER + "\nx,arc,4\n")
    with pytest.raises(ValueError):
        svr.read_metrics_csv(str(short))


def test_fit_rate_on_power_law(tmp_path):
    path = tmp_path / "rate.csv"
    lines = [svr.METRICS_HEADER]
    for n in (1000, 4000, 16000, 64000):
        mse = repr(3.0 * n ** -0.5)
        lines.append(f"e,arc,4,{n},0,0.03,0.5,8,1,1,{mse},1,1,1,1,0,0,0,0")
    path.write_text("\n".join(lines) + "\n")
    assert svr.fit_rate(str(path), "mse", 1000, 64000) == pytest.approx(-0.5, abs=1e-9)
