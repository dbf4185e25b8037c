import csv
import dataclasses
import io
import json
import math

import pytest

from crossdom.harness import (
    AXES,
    RunReport,
    apply_axis,
    export_report,
    run_experiment,
    sweep,
)
from crossdom.harness.cli import main
from crossdom.harness.config import resolve_scenario_path
from crossdom.harness.report import episode_columns


@pytest.fixture(scope="module")
def short(desk):
    return dataclasses.replace(desk, slots=24, train=dataclasses.replace(desk.train, episodes=2))


@pytest.fixture
def short_file(tmp_path):
    p = tmp_path / "short.yaml"
    text = resolve_scenario_path("desk_2dom").read_text()
    p.write_text(text.replace("slots: 72", "slots: 12").replace("episodes: 150", "episodes: 2"))
    return p


def _rows(path):
    with open(path) as fh:
        return list(csv.DictReader(fh))


def test_baseline_rerun_identical_csv(short, tmp_path):
    a = run_experiment(short, "baseline:bts", tmp_path / "a")
    b = run_experiment(short, "baseline:bts", tmp_path / "b")
    assert (tmp_path / "a" / "episodes.csv").read_bytes() == (tmp_path / "b" / "episodes.csv").read_bytes()
    assert a.csv_text() == b.csv_text()
    c = run_experiment(short, "baseline:bts", seed=1)
    assert c.csv_text() != a.csv_text()


def test_train_rows_and_columns(short, tmp_path):
    rep = run_experiment(short, "train", tmp_path)
    rows = _rows(tmp_path / "episodes.csv")
    assert len(rows) == 2 and list(rows[0]) == episode_columns(2)
    assert [int(r["episode"]) for r in rows] == [0, 1]
    for r in rows:
        g = int(r["generated"])
        assert g == sum(int(r[k]) for k in ("delivered", "expired", "dropped", "buffered"))
        assert int(r["delivered"]) == int(r["completed_d1"]) + int(r["completed_d2"])
        assert float(r["mcr"]) == pytest.approx(int(r["delivered"]) / g)
        assert int(r["updates_bms"]) == int(r["updates_tms"]) == 24 // 8
        assert int(r["violations"]) == 0
    summary = json.loads((tmp_path / "summary.json").read_text())
    assert summary["episodes"] == 2 and summary["scheduler"] == "hicms"
    assert summary["mcr_final_window"] == pytest.approx(rep.final_mcr)
    assert summary["mcr_final_window"] == pytest.approx(sum(float(r["mcr"]) for r in rows) / 2)


def test_baseline_columns_have_no_learning(short):
    rep = run_experiment(short, "baseline:ncms", episodes=1)
    row = next(csv.DictReader(io.StringIO(rep.csv_text())))
    assert row["updates_bms"] == row["actor_loss_tms"] == "nan"
    idms = next(csv.DictReader(io.StringIO(run_experiment(short, "baseline:idms", episodes=1).csv_text())))
    assert int(idms["updates_bms"]) == 3 and idms["updates_tms"] == "nan"


def test_save_load_and_eval(short, tmp_path):
    ck = tmp_path / "p.bin"
    run_experiment(short, "train", save_policy_path=ck)
    rep = run_experiment(short, "eval", load_policy_path=ck, episodes=1)
    assert rep.extra["greedy"] and len(rep.rows) == 1
    with pytest.raises(ValueError):
        run_experiment(short, "baseline:ncms", episodes=1, save_policy_path=tmp_path / "x.bin")


def test_bad_mode_and_export(short):
    with pytest.raises(ValueError):
        run_experiment(short, "baseline:greedy")
    with pytest.raises(ValueError):
        run_experiment(short, "train", exports=("video",))


def test_slot_and_energy_exports(short, tmp_path):
    run_experiment(short, "baseline:ncms", tmp_path, episodes=1, exports=("metrics", "slots", "energy"))
    n = 14 * 24
    slots, energy = _rows(tmp_path / "slots.csv"), _rows(tmp_path / "energy.csv")
    assert len(slots) == len(energy) == n
    assert {r["action"].split(":")[0] for r in slots} <= {"idle", "ground"}
    delivered = sum(int(r["delivered"]) for r in slots)
    assert delivered == int(_rows(tmp_path / "episodes.csv")[0]["delivered"])
    for r in energy:
        after = float(r["energy_after_j"])
        before = float(r["energy_before_j"])
        spent = float(r["e_transmit_j"]) + float(r["e_receive_j"]) + float(r["e_nominal_j"])
        assert after == pytest.approx(before - spent + float(r["harvest_stored_j"]), abs=1e-6)


def test_sweep_points(short, tmp_path):
    reps = sweep(short, "burst_survival", [1, 2, 3, 4], out_dir=tmp_path, episodes=1)
    assert [r.extra["sweep_value"] for r in reps] == [1, 2, 3, 4]
    for v in (1, 2, 3, 4):
        assert (tmp_path / f"burst_survival={v}" / "episodes.csv").exists()
    one = sweep(short, "sgl_rate_mbps", [60], episodes=1)
    base = run_experiment(short, "baseline:ncms", episodes=1)
    assert one[0].csv_text() == base.csv_text()
    with pytest.raises(ValueError, match="unknown sweep axis"):
        sweep(short, "warp_factor", [1])


def test_axes_apply(short):
    assert apply_axis(short, "sgl_rate_mbps", 30).rate_model.table_sgl_rate == 30e6
    b = apply_axis(short, "battery_kj", 50)
    assert (b.ncs.battery_j, b.cs.battery_j) == (50e3, 100e3)
    assert all(d.missions.burst_rate == 0.1 for d in apply_axis(short, "burst_rate", 0.1).domains)
    assert len(apply_axis(short, "domains", 1).domains) == 1
    assert apply_axis(short, "power.p_h", 7).power.p_h == 7.0
    assert apply_axis(short, "domains.1.missions.common_total", 10).domains[1].missions.common_total == 10
    assert set(AXES) == {"sgl_rate_mbps", "battery_kj", "burst_rate", "burst_survival", "domains"}
    for bad in ("power", "domains.9.orbits", "name"):
        with pytest.raises(ValueError):
            apply_axis(short, bad, 1)


def test_export_report_roundtrip(tmp_path):
    rep = RunReport("s", "train", 0, "h", 1, rows=[], final_window=20)
    paths = export_report(rep, tmp_path)
    assert paths["metrics"].read_text().strip() == ",".join(episode_columns(1))
    assert math.isnan(json.loads(paths["summary"].read_text())["mcr_final_window"])


# ---------------------------------------------------------------- command line

def test_cli_baseline(short_file, tmp_path, capsys):
    assert main(["baseline", "--kind", "ncms", "--scenario", str(short_file), "--out", str(tmp_path)]) == 0
    summary = json.loads(capsys.readouterr().out)
    assert summary["episodes"] == 2 and summary["mode"] == "baseline:ncms"
    assert len(_rows(tmp_path / "episodes.csv")) == 2


def test_cli_train_eval_and_seed(short_file, tmp_path, capsys):
    ck = tmp_path / "p.bin"
    assert main(["train", "--scenario", str(short_file), "--seed", "3", "--episodes", "1",
                 "--save-policy", str(ck)]) == 0
    assert json.loads(capsys.readouterr().out)["seed"] == 3
    assert main(["eval", "--scenario", str(short_file), "--load-policy", str(ck), "--episodes", "1",
                 "--export", "slots", "--out", str(tmp_path / "ev")]) == 0
    assert (tmp_path / "ev" / "slots.csv").exists()


def test_cli_sweep(short_file, tmp_path, capsys):
    assert main(["sweep", "--scenario", str(short_file), "--axis", "sgl_rate_mbps", "--values", "30,90",
                 "--episodes", "1", "--out", str(tmp_path)]) == 0
    assert set(json.loads(capsys.readouterr().out)) == {"30", "90"}
    assert main(["sweep", "--scenario", str(short_file), "--axis", "nope", "--values", "1"]) == 2


def test_cli_bad_scenario(tmp_path, capsys):
    bad = tmp_path / "bad.yaml"
    bad.write_text("tau: -5\n")
    assert main(["baseline", "--kind", "bts", "--scenario", str(bad)]) == 2
    assert "tau" in capsys.readouterr().err
    assert main(["train", "--scenario", str(tmp_path / "missing.yaml")]) == 2
    with pytest.raises(SystemExit):
        main(["train", "--scenario", str(bad), "--seed", "-1"])


def test_cli_inspect_and_missions(short_file, tmp_path):
    assert main(["inspect-topology", "--scenario", str(short_file), "--slots", "2",
                 "--out", str(tmp_path / "t.csv")]) == 0
    rows = _rows(tmp_path / "t.csv")
    assert rows and {r["slot"] for r in rows} <= {"1", "2"}
    assert {r["kind"] for r in rows} <= {"isl", "idl", "sgl"}
    assert main(["dump-missions", "--scenario", str(short_file), "--out", str(tmp_path)]) == 0
    ms = _rows(tmp_path / "missions.csv")
    assert sum(r["kind"] == "common" for r in ms) == 280
    assert len({r["uid"] for r in ms}) == len(ms)
