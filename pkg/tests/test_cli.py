import json

import numpy as np
import pytest

from gammafit import io
from gammafit.cli import main
from gammafit.errors import NotInvertible, ParseError, ValidationError

LINE_CFG = {"group": {"N": 12, "d": 1}, "lattice": [[3]],
            "point_group": [[[1]], [[-1]]], "kappa": 1, "seed": 3}


@pytest.fixture
def problem(tmp_path):
    cfg = tmp_path / "cfg.json"
    cfg.write_text(json.dumps(LINE_CFG))
    rng = np.random.default_rng(5)
    data = tmp_path / "data.json"
    io.save_dataset(data, [rng.normal(size=12) + 1j * rng.normal(size=12) for _ in range(3)],
                    12, 1)
    return cfg, data


def test_parse_config(problem):
    cfg = io.parse_config(problem[0])
    assert (cfg.N, cfg.d, cfg.kappa) == (12, 1, 1)
    assert cfg.crystal().group.order == 2
    assert io.config_from_dict(cfg.to_json()) == cfg


def test_config_errors(tmp_path):
    bad = dict(LINE_CFG, kappa=0)
    with pytest.raises(ValidationError, match="kappa"):
        io.config_from_dict(bad)
    bad = dict(LINE_CFG, point_group=[[[1]], [[2]]])
    with pytest.raises(NotInvertible, match=r"point_group\[1\]"):
        io.config_from_dict(bad).crystal()
    with pytest.raises(ValidationError, match="unknown"):
        io.config_from_dict(dict(LINE_CFG, colour=1))
    with pytest.raises(ValidationError, match=r"lattice\[0\]\[0\]"):
        io.config_from_dict(dict(LINE_CFG, lattice=[["x"]]))
    p = tmp_path / "broken.json"
    p.write_text('{\n "group": {"N": 12,\n')
    with pytest.raises(ParseError, match="broken.json:3"):
        io.parse_config(p)
    with pytest.raises(ParseError):
        io.parse_config(tmp_path / "missing.json")


def test_dataset_roundtrip_json_and_csv(tmp_path, problem):
    cfg = io.parse_config(problem[0])
    sigs = io.load_dataset(problem[1], cfg)
    assert len(sigs) == 3 and sigs[0].shape == (12,)
    csv_path = tmp_path / "d.csv"
    rows = ["N,d,m", "12,1,3"]
    for s in sigs:
        rows.append(",".join(repr(float(v)) for z in s for v in (z.real, z.imag)))
    csv_path.write_text("\n".join(rows) + "\n")
    again = io.load_dataset(csv_path, cfg)
    assert all(np.array_equal(a, b) for a, b in zip(sigs, again))
    csv_path.write_text("N,d,m\n12,1,2\n1,2\n")
    with pytest.raises(ValidationError):
        io.load_dataset(csv_path, cfg)
    other = tmp_path / "o.json"
    io.save_dataset(other, [np.zeros(8)], 8, 1)
    with pytest.raises(ValidationError):
        io.load_dataset(other, cfg)


def test_solve_is_deterministic(tmp_path, problem):
    cfg, data = problem
    for name in ("a", "b"):
        assert main(["solve", "--config", str(cfg), "--data", str(data),
                     "--out", str(tmp_path / name)]) == 0
    for f in ("generators.json", "report.json"):
        assert (tmp_path / "a" / f).read_bytes() == (tmp_path / "b" / f).read_bytes()
    rep = json.loads((tmp_path / "a" / "report.json").read_text())
    assert rep["achieved_error"] >= rep["spectral_bound"] - 1e-9


def test_solve_full_kappa(tmp_path, problem):
    cfg, data = problem
    assert main(["solve", "--config", str(cfg), "--data", str(data), "--kappa", "3",
                 "--out", str(tmp_path / "o")]) == 0
    rep = json.loads((tmp_path / "o" / "report.json").read_text())
    assert rep["achieved_error"] <= 1e-9


def test_generators_reproduce_spectra(tmp_path, problem):
    cfg, data = problem
    main(["solve", "--config", str(cfg), "--data", str(data), "--out", str(tmp_path / "o")])
    conf = io.parse_config(cfg)
    psis, _ = io.load_generators(tmp_path / "o" / "generators.json", conf)
    rep = json.loads((tmp_path / "o" / "report.json").read_text())
    from gammafit.solver import error_functional
    e = error_functional(conf.crystal(), io.load_dataset(data, conf), generators=psis)
    assert abs(e - rep["achieved_error"]) <= 1e-9


def test_verify_and_exit_codes(tmp_path, problem, capsys):
    cfg, data = problem
    assert main(["verify", "--config", str(cfg), "--data", str(data)]) == 0
    out = tmp_path / "o"
    main(["solve", "--config", str(cfg), "--data", str(data), "--out", str(out)])
    assert main(["verify", "--config", str(cfg), "--data", str(data),
                 "--solution", str(out)]) == 0
    gen = json.loads((out / "generators.json").read_text())
    gen["generators"][0] = [[3 * a, 3 * b] for a, b in gen["generators"][0]]
    (out / "generators.json").write_text(json.dumps(gen))
    assert main(["verify", "--config", str(cfg), "--data", str(data),
                 "--solution", str(out)]) == 3
    assert "worst offender" in capsys.readouterr().err
    broken = tmp_path / "bad.json"
    broken.write_text("{")
    assert main(["verify", "--config", str(broken), "--data", str(data)]) == 2
    with pytest.raises(SystemExit) as exc:
        main(["solve", "--config", str(cfg)])
    assert exc.value.code == 1
    assert main(["solve", "--config", str(cfg), "--data", str(data), "--kappa", "9",
                 "--out", str(tmp_path / "x")]) == 2


def test_spectrum_and_decompose(tmp_path, problem):
    cfg, data = problem
    csv_path = tmp_path / "s.csv"
    assert main(["spectrum", "--config", str(cfg), "--data", str(data),
                 "--out", str(csv_path)]) == 0
    lines = csv_path.read_text().splitlines()
    assert lines[0] == "orbit,rep,stabilizer_order,i,g,sigma2"
    assert len(lines) == 1 + 3 * 6
    assert main(["decompose", "--config", str(cfg), "--data", str(data),
                 "--out", str(tmp_path / "d")]) == 0
    pairs = json.loads((tmp_path / "d" / "orthogonality.json").read_text())["pairs"]
    assert all(p["overlap"] <= 1e-9 for p in pairs)
