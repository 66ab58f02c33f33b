import json

import pytest

import ouneumann
from app import main as app_main
from app.commands import verify as verify_command
from app.commands.config import config_hash, load_config, parse, serialize, validate
from app.errors import ConfigError
from app.services.verify import DEFAULT_MANIFEST

SLAB_SWEEP = """
command = "sweep"
lambda = 1.0

[domain]
kind = "slab"
a = [1.0]
b = 1.0

[rhs]
name = "poly"
coefficients = [0.0, 1.0, 0.0, 1.0]

[sweep]
dims = [1, 2, 3]
"""


@pytest.fixture(autouse=True)
def clean_environment(monkeypatch):
    for key in ("OUNEUMANN_SEED", "OUNEUMANN_WORKERS", "OUNEUMANN_DATA_DIR"):
        monkeypatch.delenv(key, raising=False)


def write(tmp_path, text, name="experiment.toml"):
    path = tmp_path / name
    path.write_text(text)
    return path


def cli(*args):
    return ouneumann.main([*args, "--quiet", "--no-ledger"])


def test_parse_and_serialize_round_trip():
    config = parse(SLAB_SWEEP)
    assert config.command == "sweep"
    assert config.lam == 1.0
    assert config.domain.kind == "slab"
    assert config.rhs.spec() == {"name": "poly", "coefficients": [0.0, 1.0, 0.0, 1.0]}
    again = parse(serialize(config))
    assert again == config
    assert config_hash(again) == config_hash(config)


def test_precedence_flags_over_file_over_environment(tmp_path, monkeypatch):
    monkeypatch.setenv("OUNEUMANN_SEED", "5")
    assert load_config().oracle.seed == 5
    path = write(tmp_path, "[oracle]\nseed = 7\n")
    assert load_config(path).oracle.seed == 7
    assert load_config(path, {"oracle": {"seed": 9}}).oracle.seed == 9
    # untouched keys of the same table survive the merge
    assert load_config(path, {"oracle": {"dt": 0.01}}).oracle.seed == 7


@pytest.mark.parametrize("data", [
    {"lambda": 0.0},
    {"unknown": 1},
    {"sweep": {"dims": [1, 7]}},
    {"grid": {"radial_nodes": 8}},
    {"quadrature": {"resolution": 2}},
    {"output": {"format": "xml"}},
    {"domain": {"kind": "torus"}},
    {"domain": {"kind": "slab", "a": [2.0], "b": 1.0}},
    {"domain": {"kind": "slab", "a": [1.0], "b": 0.0}},
    {"domain": {"kind": "ball", "r": -1.0}},
    {"domain": {"kind": "cylinder"}},
    {"domain": {"kind": "cylinder", "base": {"kind": "ball", "r": 0.0}}},
])
def test_invalid_configs(data):
    with pytest.raises(ConfigError):
        validate(data)


def test_file_errors(tmp_path):
    with pytest.raises(ConfigError):
        load_config(tmp_path / "missing.toml")
    with pytest.raises(ConfigError):
        load_config(write(tmp_path, "lambda = = 1"))


def test_hash_ignores_run_bookkeeping():
    a = validate({"output": {"out_dir": "a"}, "workers": 1})
    b = validate({"output": {"out_dir": "b"}, "workers": 8, "ledger": False, "bundle": True})
    assert config_hash(a) == config_hash(b)
    assert config_hash(a) != config_hash(validate({"lambda": 2.0}))


def test_parse_dims():
    assert ouneumann.parse_dims("1..5") == [1, 2, 3, 4, 5]
    assert ouneumann.parse_dims("1,3") == [1, 3]


def test_config_command_prints_merged_toml(capsys):
    assert ouneumann.main(["config", "--lambda", "3", "--seed", "4", "--dims", "2..3"]) == 0
    config = parse(capsys.readouterr().out)
    assert config.lam == 3.0
    assert config.oracle.seed == 4
    assert config.sweep.dims == [2, 3]


def test_solve_constant_source(tmp_path):
    out = tmp_path / "out"
    config = write(tmp_path, '[domain]\nkind = "slab"\na = [1.0]\nb = 1.0\n')
    assert cli("solve", "-c", str(config), "--lambda", "2", "-o", str(out), "--resolution", "16") == 0
    report = json.loads((out / "report.json").read_text())
    assert report["status"] == "passed"
    assert report["solution"]["min"] == pytest.approx(0.5, abs=1e-9)
    assert report["report"]["r1"] == pytest.approx(1.0, rel=1e-8)
    lines = (out / "solution.csv").read_text().splitlines()
    assert lines[0].startswith(f"# config_hash={report['config_hash']}")
    assert lines[1] == "x,u"
    assert len(lines) == 2 + 33


def test_solve_is_reproducible(tmp_path):
    for name in ("a", "b"):
        assert cli("solve", "--lambda", "0.5", "-o", str(tmp_path / name), "--resolution", "16") == 0
    for artifact in ("report.json", "checks.csv"):
        assert (tmp_path / "a" / artifact).read_bytes() == (tmp_path / "b" / artifact).read_bytes()


def test_json_format_skips_csv(tmp_path):
    assert cli("solve", "-o", str(tmp_path), "--resolution", "16", "--format", "json") == 0
    assert (tmp_path / "report.json").exists()
    assert not (tmp_path / "checks.csv").exists()


def test_config_error_exit_status(tmp_path):
    assert cli("solve", "--lambda", "-1", "-o", str(tmp_path)) == 2
    assert cli("solve", "-c", str(tmp_path / "nope.toml"), "-o", str(tmp_path)) == 2


def test_unknown_function_is_a_config_error(tmp_path):
    config = write(tmp_path, '[rhs]\nname = "sinc"\n')
    assert cli("solve", "-c", str(config), "-o", str(tmp_path / "out"), "--resolution", "16") == 2
    report = json.loads((tmp_path / "out" / "report.json").read_text())
    assert report["status"] == "error"
    assert report["failures"][0]["kind"] == "ConfigError"


def test_solver_error_exit_status(tmp_path):
    config = write(tmp_path, '[domain]\nkind = "ball"\nc = [0.5, 0.0]\nr = 1.0\n')
    assert cli("solve", "-c", str(config), "-o", str(tmp_path / "out")) == 3
    report = json.loads((tmp_path / "out" / "report.json").read_text())
    assert report["failures"][0]["kind"] == "UnsupportedDomain"


def test_radial_solve_command(tmp_path):
    config = write(tmp_path, '[domain]\nkind = "ball"\nc = [0.0, 0.0]\nr = 1.0\n\n'
                             '[rhs]\nname = "radial"\ncoefficients = [2.0, -5.5, 1.25]\n')
    assert cli("solve", "-c", str(config), "-o", str(tmp_path / "out")) == 0
    rows = (tmp_path / "out" / "solution.csv").read_text().splitlines()
    assert len(rows) == 2 + 256


def test_sweep_command(tmp_path):
    config = write(tmp_path, SLAB_SWEEP)
    assert cli("sweep", "-c", str(config), "-o", str(tmp_path / "out"), "--resolution", "16") == 0
    lines = (tmp_path / "out" / "sweep.csv").read_text().splitlines()
    assert lines[1] == "n,lambda,r1,r2,r3,w22_ratio,cg_iterations,wall_time_ms"
    assert [line.split(",")[0] for line in lines[2:]] == ["1", "2", "3"]


def test_sweep_dims_flag_overrides_file(tmp_path):
    config = write(tmp_path, SLAB_SWEEP)
    assert cli("sweep", "-c", str(config), "-o", str(tmp_path / "out"), "--resolution", "16",
               "--dims", "1..2", "--format", "json") == 0
    report = json.loads((tmp_path / "out" / "report.json").read_text())
    assert [row["n"] for row in report["rows"]] == [1, 2]


def test_equivalence_command(tmp_path):
    config = write(tmp_path, '[domain]\nkind = "slab"\na = [1.0]\nb = 1.0\n\n'
                             '[rhs]\nname = "poly"\ncoefficients = [0.0, -12.0, 0.0, 4.0]\n')
    assert cli("equivalence", "-c", str(config), "-o", str(tmp_path / "out"), "--resolution", "16") == 0
    report = json.loads((tmp_path / "out" / "report.json").read_text())
    assert report["equivalence"]["extra_dims"] == 1


def test_oracle_command(tmp_path):
    config = write(tmp_path, '[domain]\nkind = "half_space"\na = [1.0]\nb = 0.0\n\n'
                             '[rhs]\nname = "poly"\ncoefficients = [0.0, 0.0, 1.0]\n')
    status = cli("oracle", "-c", str(config), "-o", str(tmp_path / "out"), "--x0=-1", "--dt", "0.02",
                 "--n-paths", "4096", "--seed", "1", "--resolution", "32")
    assert status == 0
    report = json.loads((tmp_path / "out" / "report.json").read_text())
    assert report["x0"] == [-1.0]
    assert report["estimates"][0]["n_paths"] == 4096
    assert report["reference"] is not None


def test_verify_command(tmp_path, monkeypatch):
    small = {**DEFAULT_MANIFEST, "identities": DEFAULT_MANIFEST["identities"][:4], "estimates": []}
    monkeypatch.setattr(verify_command, "DEFAULT_MANIFEST", small)
    assert cli("verify", "-o", str(tmp_path), "--resolution", "32") == 0
    report = json.loads((tmp_path / "report.json").read_text())
    assert report["summary"]["total"] == 4
    assert all(check["pass"] for check in report["checks"])
    assert len((tmp_path / "checks.csv").read_text().splitlines()) == 2 + 4


def test_poly_without_coefficients_is_a_config_error(tmp_path):
    config = write(tmp_path, '[rhs]\nname = "poly"\n')
    assert cli("solve", "-c", str(config), "-o", str(tmp_path / "out"), "--resolution", "16") == 2
    report = json.loads((tmp_path / "out" / "report.json").read_text())
    assert report["status"] == "error"
    assert report["failures"][0]["kind"] == "ConfigError"
    assert "coefficients" in report["failures"][0]["message"]


@pytest.mark.parametrize("domain", [
    '[domain]\nkind = "half_space"\na = [2.0]\n',
    '[domain]\nkind = "ball"\nc = [0.0, 0.0]\nr = -1.0\n',
    '[domain]\nkind = "slab"\na = [1.0]\nb = -0.5\n',
])
def test_bad_geometry_exits_with_config_status(tmp_path, domain):
    config = write(tmp_path, domain)
    assert cli("solve", "-c", str(config), "-o", str(tmp_path / "out")) == 2


def test_unexpected_errors_exit_with_solver_status(tmp_path, monkeypatch):
    def broken(config, out_dir, config_hash):
        raise RuntimeError("boom")

    monkeypatch.setitem(app_main.COMMANDS, "solve", broken)
    assert cli("solve", "-o", str(tmp_path / "out")) == 3
    report = json.loads((tmp_path / "out" / "report.json").read_text())
    assert report["failures"][0]["kind"] == "RuntimeError"


def test_oracle_on_a_centred_disk_uses_the_radial_reference(tmp_path):
    config = write(tmp_path, '[domain]\nkind = "ball"\nc = [0.0, 0.0]\nr = 1.0\n\n'
                             '[rhs]\nname = "radial"\ncoefficients = [2.0, -5.5, 1.25]\n')
    status = cli("oracle", "-c", str(config), "-o", str(tmp_path / "out"), "--x0", "0.8,0.0",
                 "--dt", "0.02", "--n-paths", "2048")
    assert status in (0, 1)
    report = json.loads((tmp_path / "out" / "report.json").read_text())
    # u = |x|^4 / 4 - |x|^2 / 2
    assert report["reference"] == pytest.approx(0.8 ** 4 / 4 - 0.8 ** 2 / 2, abs=1e-3)
    assert [check["name"] for check in report["checks"]] == ["oracle:agreement"]


@pytest.mark.slow
def test_full_verify_runs_are_byte_identical(tmp_path):
    assert cli("verify", "-o", str(tmp_path / "a"), "--seed", "3") == 0
    assert cli("verify", "-o", str(tmp_path / "b"), "--seed", "3", "--workers", "4") == 0
    for artifact in ("report.json", "checks.csv"):
        assert (tmp_path / "a" / artifact).read_bytes() == (tmp_path / "b" / artifact).read_bytes()
