import pytest

from braille_head.braille import text_to_cells
from braille_head.machine import (AxisSpec, ConfigError, EncoderSpec, LayoutSpec, MachineConfig,
                                  NonIntegralMove, ServoSpec, axis_time, servo_time)
from braille_head.planner import ColumnPlan, JobPlan, SweepSegment, plan_job
from braille_head.sim import (Dot, EncoderAmbiguity, OffGridDot, PlanViolation, VirtualPaper,
                              emboss_text, estimate_time, execute, plan_text, read_back,
                              throughput)

CONFIG = MachineConfig()
LAYOUT = CONFIG.layout


def test_servo_time():
    assert servo_time(60, ServoSpec()) == 0.11
    assert servo_time(0, ServoSpec()) == 0
    assert servo_time(242, ServoSpec()) == pytest.approx(242 / (60 / 0.11), rel=1e-12)
    assert servo_time(60, ServoSpec(gear_ratio=2.0)) == pytest.approx(0.22)
    with pytest.raises(ValueError):
        servo_time(-1, ServoSpec())


def test_servo_spec_derived():
    spec = ServoSpec(gear_ratio=2.0)
    assert ServoSpec().sweep_rate == pytest.approx(545.4545, abs=1e-4)
    assert spec.shaft_rate == pytest.approx(ServoSpec().sweep_rate / 2)
    assert spec.shaft_torque == pytest.approx(2 * 0.343233, abs=1e-6)


def test_axis_time():
    assert axis_time(2.54, AxisSpec(speed_mm_s=20)) == pytest.approx(0.127)
    assert axis_time(0, AxisSpec()) == 0
    assert axis_time(10.16, AxisSpec(speed_mm_s=10)) == pytest.approx(1.016)
    with pytest.raises(NonIntegralMove):
        axis_time(2.54, AxisSpec(step_mm=0.05))


def test_empty_plan():
    report, paper = execute(plan_job([]))
    assert paper.dots == [] and report.total_time == 0
    assert report.rate is None


def test_single_letter_a():
    report, paper = execute(plan_text("a"))
    assert [(d.x, d.y) for d in paper.dots] == [LAYOUT.cell_origin(0, 0)]
    assert paper.dots[0].peak_mm == pytest.approx(0.5)
    assert report.spurious_dot_count == 0 and report.missing_dot_count == 0


def test_ab_dots_on_grid():
    _, paper = execute(plan_text("ab"))
    assert len(paper.dots) == 3
    x0, y0 = LAYOUT.cell_origin(0, 0)
    x1, _ = LAYOUT.cell_origin(0, 1)
    got = sorted((round(d.x, 6), round(d.y, 6)) for d in paper.dots)
    assert got == sorted([(x0, y0), (x1, y0), (x1, round(y0 + 2.54, 6))])


def test_hello_round_trip():
    result = emboss_text("hello")
    assert result.readback_cells == text_to_cells("hello")
    assert result.readback_text == "hello" and result.roundtrip_ok


def test_trailing_blanks_need_cell_count():
    result = emboss_text("a  ")
    assert read_back(result.paper, LAYOUT) == [1]
    assert result.readback_text == "a  "


def test_offgrid_dot():
    paper = VirtualPaper(dots=[Dot(10.0 + 1.0, 10.0, 0.5)])
    with pytest.raises(OffGridDot):
        read_back(paper, LAYOUT)
    assert read_back(VirtualPaper(), LAYOUT) == []
    # 0.05 mm off still snaps
    assert read_back(VirtualPaper(dots=[Dot(10.05, 10.0, 0.5)]), LAYOUT) == [1]


def test_time_additivity_and_monotone_clock():
    report, _ = execute(plan_text("Timing, 42 ok?"))
    assert abs(report.total_time - sum(e.duration for e in report.events)) < 1e-9
    ts = [e.t for e in report.events]
    assert all(b >= a for a, b in zip(ts, ts[1:]))
    assert report.total_time == pytest.approx(estimate_time(plan_text("Timing, 42 ok?")), abs=1e-9)


def test_time_breakdown_for_a():
    plan = plan_text("a")
    report, _ = execute(plan)
    expect = plan.total_travel / 60 * 0.11 + 2.54 / 20
    assert report.total_time == pytest.approx(expect, abs=1e-12)


def test_restrike_recorded_once():
    # blank-to-arc-0 sweep crossing peak 0 twice within one dwell
    col = ColumnPlan(1, 100.0, (SweepSegment(100.0, 44.0), SweepSegment(44.0, 100.0)), 0)
    report, paper = execute(JobPlan(100.0, (col,)))
    assert report.strike_count == 1 and len(paper.dots) == 1
    col = ColumnPlan(1, 359.0, (SweepSegment(359.0, 451.0), SweepSegment(451.0, 359.0),
                                SweepSegment(359.0, 451.0)), 0)
    report, paper = execute(JobPlan(359.0, (col,)))
    assert report.strike_count == 3 and len(paper.dots) == 1


def test_execute_rechecks_plan():
    col = ColumnPlan(0, 100.0, (SweepSegment(100.0, 200.0),), 0)
    with pytest.raises(PlanViolation):
        execute(JobPlan(100.0, (col,)))


def test_encoder_ambiguity():
    coarse = MachineConfig(encoder=EncoderSpec(counts_per_rev=36))
    with pytest.raises(EncoderAmbiguity):
        execute(plan_text("hello"), coarse)
    with pytest.raises(ConfigError):
        MachineConfig(encoder=EncoderSpec(counts_per_rev=35))


def test_force_gate_reported():
    report, _ = execute(plan_text("a"))
    assert report.min_available_force == pytest.approx(270, abs=1)
    assert report.force_ok
    weak = MachineConfig(layout=LayoutSpec(emboss_force_n=500.0))
    report, _ = execute(plan_text("a", weak), weak)
    assert not report.force_ok


def test_throughput():
    cps, ratio, home = throughput(25.0, 25)
    assert (cps, ratio, home) == (1.0, 800.0, True)
    with pytest.raises(ValueError):
        throughput(0.0, 3)


def test_grid_law_and_no_spurious_on_corpus(corpus):
    for text in corpus[:50]:
        result = emboss_text(text)
        assert result.report.spurious_dot_count == 0
        assert result.roundtrip_ok, text


def test_csv_and_svg_outputs():
    result = emboss_text("ab")
    csv = result.paper.to_csv().splitlines()
    assert csv[0] == "x_mm,y_mm,peak_mm"
    assert csv[1] == "10.000000,10.000000,0.500000"
    assert len(csv) == 4
    svg = result.paper.to_svg()
    assert svg.count("<circle") == 3
    assert 'cx="100.00" cy="100.00"' in svg


def test_harmonic_cams_round_trip():
    cfg = MachineConfig.from_dict({"cam": {"motion_law": "harmonic"}})
    result = emboss_text("Harmonic 7", cfg)
    assert result.roundtrip_ok and result.report.spurious_dot_count == 0


def test_config_round_trip_and_validation():
    cfg = MachineConfig()
    assert MachineConfig.loads(cfg.dumps()) == cfg
    assert MachineConfig.loads(cfg.dumps()).dumps() == cfg.dumps()
    with pytest.raises(ConfigError):
        MachineConfig.from_dict({"servo": {"rpm": 3}})
    with pytest.raises(ConfigError):
        MachineConfig.from_dict({"gearbox": {}})
    with pytest.raises(ConfigError):
        MachineConfig.from_dict({"layout": {"emboss_threshold_mm": 0.6}})
    with pytest.raises(ConfigError):
        MachineConfig.from_dict({"axis_x": {"speed_mm_s": 0}})
    with pytest.raises(ConfigError):
        MachineConfig.from_dict({"encoder": {"counts_per_rev": 512.5}})
    partial = MachineConfig.from_dict({"servo": {"gear_ratio": 2}})
    assert partial.servo.gear_ratio == 2.0 and partial.axis_x == cfg.axis_x
