import contextlib
import csv
import hashlib
import io
import json
import math
import os
import subprocess
import sys
from pathlib import Path

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from atomcomb.cli import (
    COMMANDS,
    DEFAULTS,
    EXIT_CONFIG,
    EXIT_NUMERICAL,
    EXIT_OK,
    EXIT_PARTIAL,
    ConfigError,
    build_parser,
    effective_config,
    main,
    parse_config,
)

GOLDEN = Path(__file__).parent / "golden"
FAST = ["--realizations", "2000", "--modes-cap", "80", "--n-mean", "600"]
SPEC_FLAGS = ["--config", "--seed", "--temperature-nk", "--n-mean", "--n-sigma", "--trap-hz",
              "--phi0-rad", "--delta-rad", "--realizations", "--modes-cap", "--out", "--format"]


def help_text(args):
    buf = io.StringIO()
    with contextlib.redirect_stdout(buf), pytest.raises(SystemExit):
        build_parser().parse_args(args)
    return buf.getvalue()


def manifest_files(out: Path) -> dict:
    lines = (out / "manifest.txt").read_text().splitlines()
    files = lines[lines.index("files") + 1:]
    return {name: digest for digest, name in (ln.split("  ") for ln in files)}


def read_csv(path):
    with open(path, newline="") as fh:
        return list(csv.reader(fh))


class TestHelp:
    @pytest.mark.parametrize("name", ("main",) + COMMANDS)
    def test_golden(self, name):
        text = help_text(["--help"] if name == "main" else [name, "--help"])
        path = GOLDEN / f"help_{name.replace('-', '_')}.txt"
        if os.environ.get("UPDATE_GOLDEN"):
            path.write_text(text)
        assert text == path.read_text()

    @pytest.mark.parametrize("name", COMMANDS)
    def test_every_flag_with_default(self, name):
        text = help_text([name, "--help"])
        for flag in SPEC_FLAGS:
            assert flag in text
        assert text.count("(default:") >= len(SPEC_FLAGS) - 1  # --config has no default


class TestParseConfig:
    def test_minimal_flags(self):
        cfg = parse_config(None, {"temperature_nk": 25.0, "trap_hz": "125,75,25", "n_mean": 4000},
                           command="solve")
        assert cfg.gas.temperature == pytest.approx(25e-9)
        assert cfg.gas.n_sigma == pytest.approx(math.sqrt(4000))
        assert cfg.trap.omega_z == pytest.approx(2 * math.pi * 25)
        assert cfg.master_seed == DEFAULTS["seed"]
        assert cfg.phi0 == pytest.approx(math.pi / 20) and cfg.delta == pytest.approx(math.pi / 200)
        assert cfg.plan is None

    def test_single_frequency_isotropic(self):
        assert parse_config(None, {"trap_hz": "125"}, command="tc").trap.is_isotropic

    def test_unknown_key(self):
        with pytest.raises(ConfigError, match="tempratureK"):
            parse_config({"tempratureK": 1e-8}, command="tc")

    @pytest.mark.parametrize("key,value", [
        ("temperature_nk", -5), ("n_mean", 0.2), ("n_sigma", -1), ("trap_hz", "1,2"),
        ("trap_hz", "0,1,1"), ("phi0_rad", 4.0), ("delta_rad", 0.5), ("realizations", 0),
        ("modes_cap", 1), ("seed", -3), ("format", "xml"), ("weights", "cauchy"),
        ("temperature_nk", "warm"), ("plots", "yes"),
    ])
    def test_invalid_value_names_field(self, key, value):
        with pytest.raises(ConfigError, match=key):
            parse_config({key: value}, command="tc")

    def test_flags_override_file(self, tmp_path):
        path = tmp_path / "c.json"
        path.write_text(json.dumps({"command": "solve", "temperature_nk": 30, "seed": 5}))
        cfg = parse_config(path, {"temperature_nk": 12.0})
        assert cfg.gas.temperature == pytest.approx(12e-9)
        assert cfg.master_seed == 5 and cfg.command == "solve"

    def test_bad_file(self, tmp_path):
        with pytest.raises(ConfigError, match="not found"):
            parse_config(tmp_path / "missing.json", command="tc")
        (tmp_path / "bad.json").write_text("{")
        with pytest.raises(ConfigError, match="valid JSON"):
            parse_config(tmp_path / "bad.json", command="tc")

    @settings(max_examples=40)
    @given(
        command=st.sampled_from(COMMANDS),
        T=st.floats(0.5, 500), n=st.floats(1, 1e6),
        hz=st.lists(st.floats(1, 1000), min_size=3, max_size=3),
        phi0=st.floats(0.01, math.pi), frac=st.floats(0.01, 0.5),
        seed=st.integers(0, 2 ** 64 - 1), sigma=st.none() | st.floats(0, 100),
    )
    def test_round_trip(self, command, T, n, hz, phi0, frac, seed, sigma):
        flags = {"temperature_nk": T, "n_mean": n, "trap_hz": hz, "phi0_rad": phi0,
                 "delta_rad": phi0 * frac, "seed": seed, "n_sigma": sigma}
        cfg = parse_config(None, flags, command=command)
        emitted = json.loads(json.dumps(effective_config(cfg)))
        again = parse_config(emitted)
        assert again == cfg
        assert effective_config(again) == emitted


class TestMain:
    def run(self, tmp_path, *args, name="out"):
        out = tmp_path / name
        code = main([*args, "--out", str(out)])
        return code, out

    def test_tc(self, tmp_path):
        code, out = self.run(tmp_path, "tc", "--trap-hz", "125,75,25")
        assert code == EXIT_OK
        summary = json.loads((out / "summary.json").read_text())
        assert summary["results"]["t_c_nk"] == pytest.approx(47.6, abs=0.2)

    def test_manifest_lists_every_file(self, tmp_path):
        code, out = self.run(tmp_path, "comb", "--temperature-nk", "25", "--plots", *FAST)
        assert code == EXIT_OK
        listed = manifest_files(out)
        on_disk = {p.name for p in out.iterdir()} - {"manifest.txt"}
        assert set(listed) == on_disk
        for name, digest in listed.items():
            assert hashlib.sha256((out / name).read_bytes()).hexdigest() == digest
        text = (out / "manifest.txt").read_text()
        assert "seed 20240521" in text and "numpy " in text and "inputs {" in text

    def test_field_rows(self, tmp_path):
        code, out = self.run(tmp_path, "field", *FAST)
        rows = read_csv(out / "field.csv")
        assert rows[0] == ["re_psi", "im_psi", "phase_rad", "modulus"]
        assert len(rows) == 1 + 2000

    def test_comb_files(self, tmp_path):
        code, out = self.run(tmp_path, "comb", "--phi0-rad", str(math.pi / 20), *FAST)
        assert code == EXIT_OK
        hist = read_csv(out / "comb_hist.csv")
        assert hist[0] == ["bin_lo_rad", "bin_hi_rad", "count"]
        widths = {round(float(r[1]) - float(r[0]), 12) for r in hist[1:]}
        assert widths == {round(math.pi / 20, 12)}
        rep = read_csv(out / "rep_freq.csv")
        assert rep[0] == ["omega_rad_per_s", "freq_hz", "weight"]
        assert sum(float(r[2]) for r in rep[1:]) == pytest.approx(1.0)
        for r in rep[1:3]:
            assert float(r[1]) == pytest.approx(float(r[0]) / (2 * math.pi))

    def test_formats(self, tmp_path):
        _, out = self.run(tmp_path, "spectrum", "--format", "table", *FAST, name="t")
        assert (out / "spectrum.csv").exists() and not (out / "summary.json").exists()
        _, out = self.run(tmp_path, "spectrum", "--format", "summary", *FAST, name="s")
        assert not (out / "spectrum.csv").exists() and (out / "summary.json").exists()

    def test_config_error_exit(self, tmp_path, capsys):
        path = tmp_path / "c.json"
        path.write_text(json.dumps({"tempratureK": 10}))
        code, _ = self.run(tmp_path, "tc", "--config", str(path))
        assert code == EXIT_CONFIG
        assert "tempratureK" in capsys.readouterr().err
        code, _ = self.run(tmp_path, "tc", "--n-mean", "0")
        assert code == EXIT_CONFIG

    def test_numerical_failure_exit(self, tmp_path):
        code, out = self.run(tmp_path, "solve", "--temperature-nk", "0.001")
        assert code == EXIT_NUMERICAL
        report = json.loads((out / "error.json").read_text())
        assert report["error"] == "DomainError" and report["status"] == EXIT_NUMERICAL
        assert "error.json" in manifest_files(out)

    def test_partial_sweep_exit(self, tmp_path):
        code, out = self.run(tmp_path, "sweep-temp", "--temperatures-nk", "0.001,20,40", *FAST)
        assert code == EXIT_PARTIAL
        rows = read_csv(out / "sweep.csv")
        assert len(rows) == 4 and rows[1][-1].startswith("DomainError") and rows[2][-1] == ""
        summary = json.loads((out / "summary.json").read_text())
        assert summary["status"] == EXIT_PARTIAL and summary["results"]["failed"] == 1

    def test_sweep_trap_scatter(self, tmp_path):
        code, out = self.run(tmp_path, "sweep-trap", "--temperatures-nk", "25",
                             "--trap-grid-hz", "50,150,250", *FAST)
        assert code == EXIT_OK
        rows = read_csv(out / "sweep.csv")
        assert len(rows) == 4
        scatter = read_csv(out / "scatter.csv")
        assert scatter[0][-3:] == ["omega_rad_per_s", "freq_hz", "weight"]
        assert sorted({round(float(r[1]), 9) for r in scatter[1:]}) == [50.0, 150.0, 250.0]

    @pytest.mark.parametrize("command", COMMANDS)
    def test_same_seed_same_checksums(self, tmp_path, command):
        args = [command, *FAST, "--temperature-nk", "25"]
        if command.startswith("sweep"):
            args += ["--temperatures-nk", "20,40"]
        if command == "sweep-trap":
            args += ["--trap-grid-hz", "100,200"]
        _, a = self.run(tmp_path, *args, name="a")
        first = manifest_files(a)
        first_manifest = (a / "manifest.txt").read_bytes()
        _, a2 = self.run(tmp_path, *args, name="a")
        assert manifest_files(a2) == first
        assert (a2 / "manifest.txt").read_bytes() == first_manifest

    def test_parallel_sweep_identical(self, tmp_path):
        base = ["sweep-temp", *FAST, "--temperatures-nk", "15,30,45"]
        _, a = self.run(tmp_path, *base, "--workers", "1", name="w1")
        _, b = self.run(tmp_path, *base, "--workers", "3", name="w3")
        assert (a / "sweep.csv").read_bytes() == (b / "sweep.csv").read_bytes()
        assert manifest_files(a)["sweep.csv"] == manifest_files(b)["sweep.csv"]

    def test_module_entry_point(self, tmp_path):
        out = tmp_path / "m"
        proc = subprocess.run([sys.executable, "-m", "atomcomb", "tc", "--out", str(out)],
                              capture_output=True, text=True)
        assert proc.returncode == 0
        assert proc.stdout.strip().endswith("manifest.txt")
