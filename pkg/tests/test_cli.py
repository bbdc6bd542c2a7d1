import json

import pytest

from braille_head.cli import main
from braille_head.machine import MachineConfig


def run(capsys, *argv):
    code = main(list(argv))
    out, err = capsys.readouterr()
    return code, out, err


def test_translate(capsys):
    code, out, _ = run(capsys, "translate", "ab")
    assert code == 0
    assert out.splitlines() == ["⠁⠃", "1 12"]


def test_translate_empty_and_bad(capsys):
    assert run(capsys, "translate", "") == (0, "", "")
    code, _, err = run(capsys, "translate", "¤")
    assert code == 2 and "¤" in err


def test_translate_from_file(tmp_path, capsys):
    src = tmp_path / "in.txt"
    src.write_text("hi\n", encoding="utf-8")
    code, out, _ = run(capsys, "translate", "--file", str(src))
    assert code == 0 and out.splitlines()[0] == "⠓⠊"


def test_plan_single_letter(capsys):
    code, out, err = run(capsys, "plan", "a")
    assert code == 0
    data = json.loads(out)
    kinds = [a["type"] for a in data["actions"]]
    assert kinds.count("column") == 2 and kinds.count("move") == 1
    summary = dict(kv.split("=") for kv in err.split())
    assert float(summary["travel_deg"]) == pytest.approx(data["total_travel_deg"])
    assert summary["columns"] == "2"


def test_plan_empty(capsys):
    code, out, _ = run(capsys, "plan", "")
    assert code == 0 and json.loads(out)["actions"] == []


def test_simulate_hello(capsys):
    code, out, _ = run(capsys, "simulate", "hello")
    assert code == 0
    report = json.loads(out)
    assert report["roundtrip"] == "ok" and report["readback_text"] == "hello"
    assert report["spurious_dot_count"] == 0 and report["missing_dot_count"] == 0
    assert report["industrial_ratio"] == pytest.approx(800 / report["chars_per_second"], rel=1e-5)
    assert report["force_ok"] and report["pressure_angle_ok"]


def test_simulate_empty(capsys):
    code, out, _ = run(capsys, "simulate", "")
    report = json.loads(out)
    assert code == 0 and report["total_time_s"] == 0 and report["dot_count"] == 0


def test_simulate_saved_plan(tmp_path, capsys):
    plan = tmp_path / "plan.json"
    assert main(["plan", "Cat 9", "--out", str(plan)]) == 0
    capsys.readouterr()
    code, out, _ = run(capsys, "simulate", "--plan-file", str(plan))
    assert code == 0
    assert json.loads(out)["readback_text"] == "Cat 9"


def test_simulate_stamp(capsys):
    _, out, _ = run(capsys, "simulate", "a", "--stamp")
    assert "generated_at" in json.loads(out)
    _, out, _ = run(capsys, "simulate", "a")
    assert "generated_at" not in json.loads(out)


def test_cam(tmp_path, capsys):
    csv, svg = tmp_path / "cam.csv", tmp_path / "cam.svg"
    code, out, _ = run(capsys, "cam", "--samples", "180", "--csv", str(csv), "--svg", str(svg))
    assert code == 0
    assert "13.6" in out and "269.6 N" in out
    assert len(csv.read_text().splitlines()) == 181
    assert svg.read_text().startswith("<svg")


def test_dump_config_idempotent(tmp_path, capsys):
    code, first, _ = run(capsys, "dump-config")
    assert code == 0 and MachineConfig.loads(first) == MachineConfig()
    path = tmp_path / "cfg.json"
    path.write_text(first, encoding="utf-8")
    _, second, _ = run(capsys, "dump-config", "--config", str(path))
    assert first == second


def test_config_from_environment(tmp_path, monkeypatch, capsys):
    path = tmp_path / "cfg.json"
    path.write_text(json.dumps({"servo": {"gear_ratio": 2}}), encoding="utf-8")
    monkeypatch.setenv("EMBOSS_CONFIG", str(path))
    _, out, _ = run(capsys, "dump-config")
    assert json.loads(out)["servo"]["gear_ratio"] == 2


@pytest.mark.parametrize("cfg,code", [
    ({"servo": {"rpm": 60}}, 1),
    ({"layout": {"paper_width_mm": 21}}, 3),
    ({"cam": {"lift_mm": 0}}, 5),
])
def test_exit_codes_from_config(tmp_path, capsys, cfg, code):
    path = tmp_path / "cfg.json"
    path.write_text(json.dumps(cfg), encoding="utf-8")
    assert run(capsys, "simulate", "a", "--config", str(path))[0] == code


def test_forward_only_infeasible_exit(tmp_path, capsys):
    path = tmp_path / "cfg.json"
    path.write_text(json.dumps({"planner": {"forward_only": True}}), encoding="utf-8")
    assert run(capsys, "plan", "c", "--config", str(path))[0] == 3


def test_usage_error_exit(capsys):
    with pytest.raises(SystemExit) as exc:
        main(["frobnicate"])
    assert exc.value.code == 1
