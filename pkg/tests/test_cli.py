import json

import pytest

from core.errors import BadSpec
from main import EXIT_INPUT, EXIT_OK, build_parser, main, resolve_format
from services.io_service import certificate_to_model, dump_json, read_sweep_csv
from services.nondegeneracy import certificate_from_values
from services.tsirelson import SeesawConfig

SIMULATION = ["--expr", "cglmp3", "--dim", "3", "--state", "maximally_entangled", "--measurements", "random"]


@pytest.fixture
def cert_file(tmp_path, cglmp_cert):
    path = tmp_path / "cert.json"
    dump_json(certificate_to_model(cglmp_cert), path)
    return path


def test_parser_defaults():
    args = build_parser().parse_args(["sweep"])
    assert resolve_format(args) == "csv"
    assert args.expr == "cglmp3"
    args = build_parser().parse_args(["certify", "chsh", "--dim", "2"])
    assert resolve_format(args) == "json"
    assert args.method == "lemma1"


@pytest.mark.parametrize("command", [["simulate"], ["certify", "chsh"], ["tsirelson", "chsh"]])
def test_csv_is_sweep_only(command):
    args = build_parser().parse_args([*command, "--format", "csv"])
    with pytest.raises(BadSpec):
        resolve_format(args)


def test_simulate_rejects_csv(tmp_path):
    out = tmp_path / "corr.json"
    assert main(["simulate", *SIMULATION, "--format", "csv", "--out", str(out), "--quiet"]) == EXIT_INPUT
    assert not out.exists()


def test_simulate_writes_correlation(tmp_path):
    out = tmp_path / "corr.json"
    assert main(["simulate", *SIMULATION, "--noise", "1", "--out", str(out), "--quiet"]) == EXIT_OK
    data = json.loads(out.read_text(encoding="utf-8"))
    assert data["scenario"] == {"nx": 2, "ny": 2, "na": 3, "nb": 3}


def test_bound_without_certificate_range_exits_zero(tmp_path, cert_file):
    corr = tmp_path / "corr.json"
    out = tmp_path / "bound.json"
    assert main(["simulate", *SIMULATION, "--noise", "1", "--out", str(corr), "--quiet"]) == EXIT_OK
    code = main(["bound", str(corr), "--expr", "cglmp3", "--dim", "3", "--cert", str(cert_file), "--out", str(out)])
    assert code == EXIT_OK
    data = json.loads(out.read_text(encoding="utf-8"))
    assert data["certified"] is False
    assert data["ic_lower_ebits"] is None


def test_bound_rejects_mismatched_certificate(tmp_path, cert_file):
    corr = tmp_path / "corr.json"
    main(["simulate", *SIMULATION, "--out", str(corr), "--quiet"])
    assert main(["bound", str(corr), "--dim", "4", "--cert", str(cert_file), "--quiet"]) == EXIT_INPUT


def test_invalid_correlation_exit_code(tmp_path):
    bad = tmp_path / "bad.json"
    bad.write_text('{"scenario": {"nx": 1, "ny": 1, "na": 2, "nb": 2}, "p": [[[[0.9, 0.0], [0.0, 0.0]]]]}')
    assert main(["bound", str(bad), "--expr", "chsh", "--dim", "2", "--quiet"]) == EXIT_INPUT


def test_unknown_expression_exit_code():
    assert main(["certify", "nope", "--dim", "3", "--quiet"]) == EXIT_INPUT


def test_sweep_csv_and_metadata(tmp_path, cert_file):
    out = tmp_path / "sweep.csv"
    args = ["sweep", *SIMULATION, "--cert", str(cert_file), "--w-grid", "0,0.5,1", "--out", str(out), "--quiet"]
    assert main(args) == EXIT_OK
    rows = read_sweep_csv(out)
    assert sorted(r["w"] for r in rows) == [0.0, 0.5, 1.0]
    meta = json.loads((tmp_path / "sweep.meta.json").read_text(encoding="utf-8"))
    assert meta["noise_family"] == "white"
    assert meta["stated_threshold_gap"] == 0.07


def test_sweep_is_byte_identical(tmp_path, cert_file):
    outputs = []
    for name in ("a.csv", "b.csv"):
        out = tmp_path / name
        main(["sweep", *SIMULATION, "--cert", str(cert_file), "--points", "4", "--w-max", "0.5",
              "--seed", "3", "--out", str(out), "--quiet"])
        outputs.append(out.read_bytes())
    assert outputs[0] == outputs[1]


def test_tsirelson_command(tmp_path):
    out = tmp_path / "t.json"
    code = main(["tsirelson", "chsh", "--dim", "2", "--restarts", "2", "--max-iters", "30", "--out", str(out), "--quiet"])
    assert code == EXIT_OK
    data = json.loads(out.read_text(encoding="utf-8"))
    assert data["label"] == "heuristic lower estimate"
    assert len(data["per_restart_values"]) == 2


# ─── Кэш сертификата ──────────────────────────────────

CHSH_RUN = ["--restarts", "2", "--max-iters", "20", "--seed", "1", "--quiet"]


@pytest.fixture
def chsh_corr(tmp_path):
    corr = tmp_path / "chsh.json"
    args = ["simulate", "--expr", "chsh", "--dim", "2", "--state", "maximally_entangled",
            "--measurements", "random", "--noise", "1", "--out", str(corr), "--quiet"]
    assert main(args) == EXIT_OK
    return corr


def _bound(corr, out, *extra):
    return main(["bound", str(corr), "--expr", "chsh", "--dim", "2", "--out", str(out), *CHSH_RUN, *extra])


def test_certificate_cache_reused_for_same_run(tmp_path, chsh_corr):
    cache = tmp_path / "bound.cert.json"
    cert = certificate_from_values("chsh", 2, 2.9, 4.0)
    cert.seesaw = SeesawConfig.from_settings(restarts=2, max_iters=20, seed=1).fingerprint()
    dump_json(certificate_to_model(cert), cache)

    assert _bound(chsh_corr, tmp_path / "bound.json") == EXIT_OK
    assert json.loads(cache.read_text(encoding="utf-8"))["c_q"] == 2.9


def test_certificate_cache_recomputed_for_other_run(tmp_path, chsh_corr):
    cache = tmp_path / "bound.cert.json"
    dump_json(certificate_to_model(certificate_from_values("chsh", 2, 2.9, 4.0)), cache)

    assert _bound(chsh_corr, tmp_path / "bound.json") == EXIT_OK
    data = json.loads(cache.read_text(encoding="utf-8"))
    assert data["c_q"] != 2.9
    assert data["seesaw"]["restarts"] == 2
    assert data["seesaw"]["seed"] == 1

    assert _bound(chsh_corr, tmp_path / "bound.json", "--seed", "2") == EXIT_OK
    assert json.loads(cache.read_text(encoding="utf-8"))["seesaw"]["seed"] == 2
