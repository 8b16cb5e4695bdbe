"""Config loading, run manifests, and the five CLI subcommands end to end."""

import json
import subprocess
import sys

import numpy as np
import pytest

from stirlab.cli import main
from stirlab.config import ConfigError, build_datum, build_flow, build_grid, load_config
from stirlab.manifest import read_manifest, strip_volatile

HEAT = """
schema = "stirlab-config-v1"
experiment = "simulate"

[grid]
nx = 64
ny = 64

[datum]
kind = "sine"
kx = 1

[sim]
t_end = 0.1
record_every = 16
"""

SWEEP = """
schema = "stirlab-config-v1"
experiment = "sweep"

[grid]
nx = 64
ny = 16
lx = 4.0
ly = 1.0

[sweep]
tau = 0.1
q = 2
amplitudes = [0.0, 8.0, 64.0]

[[sweep.cases]]
name = "sin-shear"
[sweep.cases.flow]
kind = "shear"
[sweep.cases.flow.profile]
kind = "fourier"
sin = [1.0]
[sweep.cases.datum]
kind = "mean-zero-bump"
sigma = 0.25
center = [2.0, 0.5]

[[sweep.cases]]
name = "band-channel"
[sweep.cases.flow]
kind = "shear"
[sweep.cases.flow.profile]
kind = "plateaus"
plateaus = [[0.4, 0.6, 0.0]]
integral = 0.0
wiggle = 1.0
[sweep.cases.datum]
kind = "channel"
"""

QUENCH_SCAN = """
schema = "stirlab-config-v1"
experiment = "quench"

[grid]
nx = 96
ny = 32
lx = 3.0
ly = 1.0

[flow]
kind = "shear"
[flow.profile]
kind = "plateaus"
plateaus = [[0.25, 0.75, 0.0]]
integral = 0.0
wiggle = 1.0

[datum]
kind = "front"
lo = 0.7
hi = 2.3
y_window = [0.3, 0.7]
y_edge = 0.05

[reaction]
kind = "ignition"
eta0 = 0.25
gain = 2.0

[quench]
mode = "scan"
amplitudes = [0.0, 8.0]
t_horizon = 1.0
"""

# 3 geometric bisection steps shrink the 128x bracket to 128^(1/8) < 2
QUENCH_BISECT = """
schema = "stirlab-config-v1"
experiment = "quench"

[grid]
nx = 128
ny = 32
lx = 4.0
ly = 1.0

[flow]
kind = "shear"
[flow.profile]
kind = "fourier"
sin = [1.0]

[datum]
kind = "front"
lo = 1.4
hi = 2.6
y_window = [0.05, 0.45]

[reaction]
kind = "ignition"
eta0 = 0.25
gain = 2.0

[quench]
mode = "bisect"
A_lo = 1.0
A_hi = 128.0
t_horizon = 3.0
bisection_steps = 3

[quench.ia]
alpha = 4.0
c = 1.0
t_max = 1.5
budget = 0.75
at = 0.0
"""

ABSTRACT_ROT = """
schema = "stirlab-config-v1"
experiment = "abstract"

[abstract]
generator = "rotation"
amplitudes = [100.0, 1000.0]
delta = 0.01
"""


def cfg_file(tmp_path, text, name="run.toml"):
    p = tmp_path / name
    p.write_text(text)
    return p


def flow_report_cfg(flow_lines: str) -> str:
    return (
        'schema = "stirlab-config-v1"\nexperiment = "flow-report"\n\n'
        "[grid]\nnx = 16\nny = 16\n\n" + flow_lines
    )


# -- config loading -----------------------------------------------------------


class TestLoadConfig:
    def test_missing_file(self, tmp_path):
        with pytest.raises(ConfigError, match="no such config file"):
            load_config(tmp_path / "absent.toml")

    def test_syntax_error_carries_position(self, tmp_path):
        p = cfg_file(tmp_path, 'schema = "stirlab-config-v1"\n[grid\nnx = 4\n')
        with pytest.raises(ConfigError, match="line 2"):
            load_config(p)

    def test_schema_mismatch(self, tmp_path):
        p = cfg_file(tmp_path, 'schema = "other-v9"\nexperiment = "simulate"\n')
        with pytest.raises(ConfigError, match="schema"):
            load_config(p)

    def test_experiment_enum(self, tmp_path):
        p = cfg_file(tmp_path, 'schema = "stirlab-config-v1"\nexperiment = "wiggle"\n')
        with pytest.raises(ConfigError, match="experiment"):
            load_config(p)

    def test_semantic_error_names_key_path(self, tmp_path):
        p = cfg_file(
            tmp_path,
            'schema = "stirlab-config-v1"\nexperiment = "simulate"\n'
            "[grid]\nnx = 64\nny = 2\n",
        )
        with pytest.raises(ConfigError, match=r"\[grid\].ny"):
            load_config(p)

    def test_sine_needs_a_wavenumber(self, tmp_path):
        p = cfg_file(
            tmp_path,
            HEAT.replace("kind = \"sine\"\nkx = 1", "kind = \"sine\""),
        )
        cfg = load_config(p)
        with pytest.raises(ConfigError, match="kx or ky"):
            build_datum(cfg, build_grid(cfg), None)

    def test_flow_table_roundtrips(self, tmp_path):
        p = cfg_file(
            tmp_path,
            HEAT + "\n[flow]\nkind = \"shear\"\n[flow.profile]\nkind = \"fourier\"\nsin = [1.0]\n",
        )
        cfg = load_config(p)
        flow = build_flow(cfg)
        assert flow is not None
        assert abs(flow.profile.value(0.25) - 1.0) < 1e-12

    def test_bool_is_not_a_number(self, tmp_path):
        p = cfg_file(tmp_path, HEAT.replace("t_end = 0.1", "t_end = true"))
        cfg = load_config(p)
        from stirlab.config import build_sim

        with pytest.raises(ConfigError, match=r"\[sim\].t_end"):
            build_sim(cfg)


# -- manifests ----------------------------------------------------------------


class TestManifest:
    def test_lifecycle(self, tmp_path):
        from stirlab.manifest import finalize_manifest, start_manifest

        path = start_manifest(tmp_path, "simulate", {"a": 1}, seed=7)
        doc = read_manifest(path)
        assert doc["status"] == "incomplete"
        assert doc["seed"] == 7
        assert doc["finished"] is None

        art = tmp_path / "data.csv"
        art.write_text("x\n1\n")
        finalize_manifest(path, [art], notes={"ok": True})
        doc = read_manifest(path)
        assert doc["status"] == "complete"
        assert doc["notes"] == {"ok": True}
        (entry,) = doc["outputs"]
        assert entry["name"] == "data.csv"
        assert entry["bytes"] == 4
        import hashlib

        assert entry["sha256"] == hashlib.sha256(b"x\n1\n").hexdigest()

    def test_strip_volatile_drops_only_wall_clock(self):
        doc = {"status": "complete", "started": "now", "finished": "later", "seed": 0}
        assert strip_volatile(doc) == {"status": "complete", "seed": 0}


# -- simulate -----------------------------------------------------------------


@pytest.fixture(scope="module")
def heat_run(tmp_path_factory):
    tmp = tmp_path_factory.mktemp("heat")
    cfg = cfg_file(tmp, HEAT)
    out = tmp / "out"
    rc = main(["simulate", "--config", str(cfg), "--out", str(out)])
    return rc, out, cfg


class TestSimulate:
    def test_exit_zero(self, heat_run):
        rc, out, _ = heat_run
        assert rc == 0
        assert (out / "trajectory.csv").exists()

    def test_pure_heat_decay_is_exact(self, heat_run):
        _, out, _ = heat_run
        rows = (out / "trajectory.csv").read_text().strip().splitlines()
        header = rows[0].split(",")
        i_t, i_l2 = header.index("t"), header.index("L2")
        first = rows[1].split(",")
        last = rows[-1].split(",")
        ratio = float(last[i_l2]) / float(first[i_l2])
        t = float(last[i_t])
        assert abs(ratio - np.exp(-4.0 * np.pi**2 * t)) < 1e-10

    def test_manifest_complete_with_inventory(self, heat_run):
        _, out, _ = heat_run
        doc = read_manifest(out / "manifest.json")
        assert doc["status"] == "complete"
        assert doc["experiment"] == "simulate"
        assert [e["name"] for e in doc["outputs"]] == ["trajectory.csv"]
        assert doc["notes"]["final_linf"] < 1.0

    def test_config_echoed_verbatim(self, heat_run):
        _, out, _ = heat_run
        doc = read_manifest(out / "manifest.json")
        assert doc["config"]["sim"]["t_end"] == 0.1

    def test_rerun_is_byte_identical(self, heat_run, tmp_path):
        _, out, cfg = heat_run
        out2 = tmp_path / "again"
        assert main(["simulate", "--config", str(cfg), "--out", str(out2)]) == 0
        assert (out2 / "trajectory.csv").read_bytes() == (out / "trajectory.csv").read_bytes()
        a = strip_volatile(read_manifest(out / "manifest.json"))
        b = strip_volatile(read_manifest(out2 / "manifest.json"))
        assert a == b

    def test_snapshots_written_when_asked(self, tmp_path):
        cfg = cfg_file(
            tmp_path, HEAT.replace("record_every = 16", "record_every = 16\nstore_snapshots = true")
        )
        out = tmp_path / "snap"
        assert main(["simulate", "--config", str(cfg), "--out", str(out)]) == 0
        lines = (out / "snapshots.csv").read_text().splitlines()
        assert lines[0] == "t,x1,x2,value"
        assert len(lines) > 64 * 64  # at least one full field

    def test_reaction_table_routes_to_radt(self, tmp_path):
        cfg = cfg_file(
            tmp_path,
            HEAT.replace("kind = \"sine\"\nkx = 1", "kind = \"front\"\nlo = 0.2\nhi = 0.8")
            + "\n[reaction]\nkind = \"powerlaw\"\nc = 1.0\nalpha = 4.0\n",
        )
        out = tmp_path / "radt"
        assert main(["simulate", "--config", str(cfg), "--out", str(out)]) == 0
        doc = read_manifest(out / "manifest.json")
        assert doc["notes"]["bound_violations"] == 0

    def test_default_out_is_runs_subdir(self, tmp_path, monkeypatch):
        monkeypatch.chdir(tmp_path)
        cfg = cfg_file(tmp_path, HEAT)
        assert main(["simulate", "--config", str(cfg)]) == 0
        assert (tmp_path / "runs" / "simulate" / "manifest.json").exists()

    def test_seed_override_lands_in_manifest(self, tmp_path):
        cfg = cfg_file(tmp_path, HEAT)
        out = tmp_path / "seeded"
        assert main(["simulate", "--config", str(cfg), "--out", str(out), "--seed", "41"]) == 0
        assert read_manifest(out / "manifest.json")["seed"] == 41


# -- failure exits ------------------------------------------------------------


class TestFailureExits:
    def test_missing_config_is_exit_2(self, tmp_path, capsys):
        rc = main(["simulate", "--config", str(tmp_path / "gone.toml")])
        assert rc == 2
        assert "config error" in capsys.readouterr().err

    def test_syntax_error_is_exit_2(self, tmp_path, capsys):
        cfg = cfg_file(tmp_path, 'schema = "stirlab-config-v1"\n[grid\n')
        assert main(["simulate", "--config", str(cfg)]) == 2
        assert "line" in capsys.readouterr().err

    def test_experiment_subcommand_mismatch_is_exit_2(self, tmp_path, capsys):
        cfg = cfg_file(tmp_path, HEAT)
        assert main(["sweep", "--config", str(cfg)]) == 2
        err = capsys.readouterr().err
        assert "simulate" in err and "sweep" in err

    def test_cfl_violation_is_exit_3_and_leaves_incomplete_marker(self, tmp_path, capsys):
        cfg = cfg_file(
            tmp_path,
            HEAT.replace("t_end = 0.1", "t_end = 0.1\namplitude = 512.0\ndt = 0.05")
            + "\n[flow]\nkind = \"shear\"\n[flow.profile]\nkind = \"fourier\"\nsin = [1.0]\n",
        )
        out = tmp_path / "boom"
        assert main(["simulate", "--config", str(cfg), "--out", str(out)]) == 3
        assert "numeric failure" in capsys.readouterr().err
        # the crash marker survives: reruns can see the run never finished
        assert read_manifest(out / "manifest.json")["status"] == "incomplete"

    def test_bad_workers_is_exit_2(self, tmp_path):
        cfg = cfg_file(tmp_path, HEAT)
        assert main(["simulate", "--config", str(cfg), "--workers", "0"]) == 2


# -- sweep --------------------------------------------------------------------


@pytest.fixture(scope="module")
def sweep_run(tmp_path_factory):
    tmp = tmp_path_factory.mktemp("sweep")
    cfg = cfg_file(tmp, SWEEP)
    out = tmp / "out"
    rc = main(["sweep", "--config", str(cfg), "--out", str(out), "--workers", "2"])
    return rc, out, cfg


class TestSweep:
    def test_exit_zero_and_artifacts(self, sweep_run):
        rc, out, _ = sweep_run
        assert rc == 0
        assert (out / "case-00-sin-shear.csv").exists()
        assert (out / "case-01-band-channel.csv").exists()
        assert (out / "summary.json").exists()

    def test_shear_case_decays(self, sweep_run):
        _, out, _ = sweep_run
        doc = json.loads((out / "summary.json").read_text())
        case = doc["cases"][0]
        assert case["classification"] == "enhancing"
        assert case["monotone_nonincreasing"]
        assert case["ratio_last_over_first"] < 0.5

    def test_band_case_holds_the_floor(self, sweep_run):
        _, out, _ = sweep_run
        doc = json.loads((out / "summary.json").read_text())
        case = doc["cases"][1]
        assert case["classification"] == "invariant-set"
        assert case["non_enhancing_evidence"]
        vals = case["values"]
        assert min(vals) >= 0.8 * vals[0]

    def test_case_csv_matches_summary(self, sweep_run):
        _, out, _ = sweep_run
        doc = json.loads((out / "summary.json").read_text())
        rows = (out / "case-00-sin-shear.csv").read_text().strip().splitlines()
        assert rows[0] == "A,norm"
        got = [float(r.split(",")[1]) for r in rows[1:]]
        assert got == doc["cases"][0]["values"]

    def test_rerun_with_workers_is_byte_identical(self, sweep_run, tmp_path):
        _, out, cfg = sweep_run
        out2 = tmp_path / "again"
        assert main(["sweep", "--config", str(cfg), "--out", str(out2), "--workers", "2"]) == 0
        for name in ("case-00-sin-shear.csv", "case-01-band-channel.csv", "summary.json"):
            assert (out2 / name).read_bytes() == (out / name).read_bytes()

    def test_empty_cases_rejected(self, tmp_path):
        cfg = cfg_file(
            tmp_path,
            SWEEP.split("[[sweep.cases]]")[0] + "cases = []\n",
        )
        assert main(["sweep", "--config", str(cfg), "--out", str(tmp_path / "o")]) == 2


# -- flow report --------------------------------------------------------------


FLOW_TABLES = {
    "enhancing": "[flow]\nkind = \"shear\"\n[flow.profile]\nkind = \"fourier\"\nsin = [1.0]\n",
    "invariant-set": (
        "[flow]\nkind = \"shear\"\n[flow.profile]\nkind = \"plateaus\"\n"
        "plateaus = [[0.4, 0.6, 0.0]]\nintegral = 0.0\nwiggle = 1.0\n"
    ),
    "nonzero-eigenfunction": (
        "[flow]\nkind = \"shear\"\n[flow.profile]\nkind = \"plateaus\"\n"
        "plateaus = [[0.4, 0.6, 1.0]]\nintegral = 0.0\nwiggle = 1.0\n"
    ),
}


class TestFlowReport:
    @pytest.mark.parametrize("expected", sorted(FLOW_TABLES))
    def test_methods_agree_on_shear_families(self, tmp_path, expected):
        cfg = cfg_file(tmp_path, flow_report_cfg(FLOW_TABLES[expected]))
        out = tmp_path / "out"
        assert main(["flow-report", "--config", str(cfg), "--out", str(out)]) == 0
        doc = json.loads((out / "flow-report.json").read_text())
        assert doc["overall"] == expected
        assert doc["methods"]["symbolic"]["verdict"] == expected
        # no pair of methods may contradict (None = claims do not overlap)
        assert all(v in (True, None) for v in doc["agreement"].values())

    def test_cellular_flow_reports_invariant_set(self, tmp_path):
        cfg = cfg_file(tmp_path, flow_report_cfg("[flow]\nkind = \"cellular\"\namplitude = 1.0\n"))
        out = tmp_path / "out"
        assert main(["flow-report", "--config", str(cfg), "--out", str(out)]) == 0
        doc = json.loads((out / "flow-report.json").read_text())
        assert doc["overall"] == "invariant-set"
        spec = doc["methods"]["spectral"]
        assert spec["verdict"] == "invariant-set"
        assert spec["localized_first_integral_chains"] >= 1
        assert spec["nonzero_lambda_chains"] == 0

    def test_sin_shear_spectral_finds_nothing(self, tmp_path):
        cfg = cfg_file(tmp_path, flow_report_cfg(FLOW_TABLES["enhancing"]))
        out = tmp_path / "out"
        assert main(["flow-report", "--config", str(cfg), "--out", str(out)]) == 0
        doc = json.loads((out / "flow-report.json").read_text())
        spec = doc["methods"]["spectral"]
        assert spec["verdict"] == "none-found"
        assert spec["nonzero_lambda_chains"] == 0
        assert spec["localized_first_integral_chains"] == 0

    def test_needs_a_flow(self, tmp_path):
        cfg = cfg_file(tmp_path, flow_report_cfg(""))
        assert main(["flow-report", "--config", str(cfg), "--out", str(tmp_path / "o")]) == 2


# -- quench -------------------------------------------------------------------


class TestQuenchScan:
    def test_band_flow_resists(self, tmp_path):
        cfg = cfg_file(tmp_path, QUENCH_SCAN)
        out = tmp_path / "out"
        assert main(["quench", "--config", str(cfg), "--out", str(out), "--workers", "2"]) == 0
        doc = json.loads((out / "quench-report.json").read_text())
        assert doc["mode"] == "scan"
        assert doc["quenched_at"] == []
        assert doc["no_quench_at"] == [0.0, 8.0]
        assert doc["bracket"] is None
        assert all(row["quench_time"] is None for row in doc["tested"])


@pytest.fixture(scope="module")
def bisect_run(tmp_path_factory):
    tmp = tmp_path_factory.mktemp("bisect")
    cfg = cfg_file(tmp, QUENCH_BISECT)
    out = tmp / "out"
    rc = main(["quench", "--config", str(cfg), "--out", str(out)])
    return rc, out


class TestQuenchBisect:
    def test_bracket_tightens_below_factor_two(self, bisect_run):
        rc, out = bisect_run
        assert rc == 0
        doc = json.loads((out / "quench-report.json").read_text())
        assert doc["mode"] == "bisect"
        lo, hi = doc["bracket"]
        assert 1.0 < lo < hi < 128.0
        assert hi / lo <= 2.0

    def test_ia_rider_evaluates_at_fixed_amplitude(self, bisect_run):
        _, out = bisect_run
        doc = json.loads((out / "quench-report.json").read_text())
        ia = doc["ia_criterion"]
        assert ia["A"] == 0.0
        # without stirring this probe budget overshoots the criterion
        assert not ia["satisfied"]
        assert 3.0 * ia["I_A"] > 1.0
        assert abs(ia["tail_slope"] + 0.5) <= 0.15

    def test_refuted_bracket_is_reported_not_crashed(self, tmp_path):
        cfg = cfg_file(
            tmp_path,
            QUENCH_BISECT.replace("A_lo = 1.0", "A_lo = 64.0").split("[quench.ia]")[0],
        )
        out = tmp_path / "out"
        assert main(["quench", "--config", str(cfg), "--out", str(out)]) == 0
        doc = json.loads((out / "quench-report.json").read_text())
        assert doc["bracket"] is None
        assert "bracket invalid" in doc["bracket_invalid"]
        assert read_manifest(out / "manifest.json")["status"] == "complete"

    def test_quench_level_required_without_ignition(self, tmp_path):
        cfg = cfg_file(
            tmp_path,
            QUENCH_SCAN.replace(
                'kind = "ignition"\neta0 = 0.25\ngain = 2.0',
                'kind = "powerlaw"\nc = 1.0\nalpha = 4.0',
            ),
        )
        assert main(["quench", "--config", str(cfg), "--out", str(tmp_path / "o")]) == 2


# -- abstract -----------------------------------------------------------------


class TestAbstract:
    def test_rotation_measures_drop(self, tmp_path):
        cfg = cfg_file(tmp_path, ABSTRACT_ROT)
        out = tmp_path / "out"
        assert main(["abstract", "--config", str(cfg), "--out", str(out)]) == 0
        doc = json.loads((out / "summary.json").read_text())
        assert doc["non_increasing"]
        assert doc["drop_first_over_last"] >= 2.0
        rows = (out / "abstract-00.csv").read_text().splitlines()
        assert rows[0] == "t,norm,rough,h1"
        assert len(rows) > 100

    def test_diagonal_generator_is_flat(self, tmp_path):
        cfg = cfg_file(
            tmp_path,
            ABSTRACT_ROT.replace(
                'generator = "rotation"',
                'generator = "diagonal"\nlam = [0.0, 0.5, 1.0, 2.0, 4.0, 8.0]\nh1_cutoff = 1.5',
            ),
        )
        out = tmp_path / "out"
        assert main(["abstract", "--config", str(cfg), "--out", str(out)]) == 0
        doc = json.loads((out / "summary.json").read_text())
        # a normal generator commutes with its own propagator: stirring harder
        # relabels phases and moves no weight between modes
        assert doc["measures"][0] == doc["measures"][-1]

    def test_modulated_family_still_drops(self, tmp_path):
        cfg = cfg_file(tmp_path, ABSTRACT_ROT.replace("delta = 0.01", "delta = 0.01\nmodulation = 0.5"))
        out = tmp_path / "out"
        assert main(["abstract", "--config", str(cfg), "--out", str(out)]) == 0
        doc = json.loads((out / "summary.json").read_text())
        assert doc["modulation"] == 0.5
        assert doc["non_increasing"]
        assert doc["drop_first_over_last"] >= 2.0

    def test_rerun_is_byte_identical(self, tmp_path):
        cfg = cfg_file(tmp_path, ABSTRACT_ROT)
        a, b = tmp_path / "a", tmp_path / "b"
        assert main(["abstract", "--config", str(cfg), "--out", str(a)]) == 0
        assert main(["abstract", "--config", str(cfg), "--out", str(b)]) == 0
        for name in ("abstract-00.csv", "abstract-01.csv", "summary.json"):
            assert (a / name).read_bytes() == (b / name).read_bytes()

    def test_diagonal_lam_validation(self, tmp_path):
        cfg = cfg_file(
            tmp_path,
            ABSTRACT_ROT.replace(
                'generator = "rotation"', 'generator = "diagonal"\nlam = [1.0, 0.5]'
            ),
        )
        assert main(["abstract", "--config", str(cfg), "--out", str(tmp_path / "o")]) == 2


# -- console entry ------------------------------------------------------------


def test_module_runs_as_script(tmp_path):
    cfg = cfg_file(tmp_path, ABSTRACT_ROT)
    out = tmp_path / "out"
    proc = subprocess.run(
        [sys.executable, "-m", "stirlab.cli", "abstract", "--config", str(cfg), "--out", str(out)],
        capture_output=True,
        text=True,
    )
    assert proc.returncode == 0
    assert str(out) in proc.stdout
    assert (out / "manifest.json").exists()
