import json
import math
from pathlib import Path

import numpy as np
import pytest
from hypothesis import HealthCheck, given, settings, strategies as st

from klbounds import __version__
from klbounds.bootstrap import GapResult
from klbounds.errors import ConfigError, ParseError
from klbounds.inversion import BoundsRow, BoundsTable, Window, build_bound_problem
from klbounds.io import (
    RunConfig,
    config_from_dict,
    load_config,
    parse_range,
    read_bounds_csv,
    read_correlator_csv,
    read_model,
    read_result_doc,
    sidecar_path,
    write_bounds_csv,
    write_correlator_csv,
    write_model,
    write_result_doc,
)
from klbounds.spectral import CorrelatorSet, synth_correlator

from conftest import reference_model

GOLDEN = Path(__file__).parent / "golden"


# -- ranges -----------------------------------------------------------------------


def test_parse_range():
    np.testing.assert_array_equal(parse_range("0:20:5"), [0, 5, 10, 15, 20])
    np.testing.assert_array_equal(parse_range("2.5"), [2.5])
    assert len(parse_range("0:20:200")) == 200


@pytest.mark.parametrize("bad", ["0:1", "a:b:3", "0:1:0", "0:inf:3", "0:1:2:3", ""])
def test_parse_range_rejects(bad):
    with pytest.raises(ParseError):
        parse_range(bad)


# -- correlator CSV ---------------------------------------------------------------


def test_read_two_line_file(tmp_path):
    p = tmp_path / "c.csv"
    p.write_text("x,C\n1.0,0.067008909\n")
    corr = read_correlator_csv(p)
    assert len(corr) == 1 and corr.slack == 0.0
    assert corr.x[0] == 1.0 and corr.values[0] == 0.067008909


@pytest.mark.parametrize("body, line", [
    ("x,C\n1,0.1\n0.5,0.2\n", 3),
    ("x,C\n1,0.1\n1,0.2\n", 3),
    ("x,C\n1,0.1\n2,nan\n", 3),
    ("x,C\n1,0.1\n2,0.2\n3,inf\n", 4),
    ("x,C\n-1,0.1\n", 2),
    ("x,C\n1,abc\n", 2),
    ("x,C\n1,0.1,7\n", 2),
    ("t,C\n1,0.1\n", 1),
])
def test_read_errors_name_the_line(tmp_path, body, line):
    p = tmp_path / "bad.csv"
    p.write_text(body)
    with pytest.raises(ParseError, match=rf"bad\.csv:{line}:"):
        read_correlator_csv(p)


def test_read_missing_file_names_path(tmp_path):
    with pytest.raises(OSError, match="nope.csv"):
        read_correlator_csv(tmp_path / "nope.csv")


xs_strategy = st.lists(
    st.floats(1e-8, 1e3, allow_nan=False, allow_infinity=False), min_size=1, max_size=40, unique=True
)


@settings(max_examples=1000, deadline=None, suppress_health_check=[HealthCheck.function_scoped_fixture])
@given(xs=xs_strategy, data=st.data())
def test_correlator_round_trip(tmp_path, xs, data):
    xs = sorted(xs)
    cs = data.draw(st.lists(st.floats(allow_nan=False, allow_infinity=False),
                            min_size=len(xs), max_size=len(xs)))
    corr = CorrelatorSet(np.array(xs), np.array(cs))
    p = tmp_path / "rt.csv"
    write_correlator_csv(corr, p)
    back = read_correlator_csv(p)
    assert back.x.tobytes() == corr.x.tobytes()
    assert back.values.tobytes() == corr.values.tobytes()


# -- bounds CSV -------------------------------------------------------------------


def _golden_table():
    rows = [BoundsRow(0.5, 0.1, 0.1 + 0.2, "OPTIMAL", "OPTIMAL"),
            BoundsRow(2.0, math.nan, math.nan, "INFEASIBLE", "INFEASIBLE")]
    meta = {"delta_C": 1e-5, "N_c": 100, "N_v": 4000, "grid_range": [0.015, 60.0],
            "objective_kind": "GAUSSIAN_SMEAR"}
    return BoundsTable(rows, meta)


def test_bounds_csv_matches_golden(tmp_path):
    p = tmp_path / "bounds.csv"
    write_bounds_csv(_golden_table(), p)
    assert p.read_bytes() == (GOLDEN / "bounds.csv").read_bytes()
    assert sidecar_path(p).read_bytes() == (GOLDEN / "bounds.meta.json").read_bytes()


def test_sidecar_schema():
    meta = json.loads((GOLDEN / "bounds.meta.json").read_text())
    assert set(meta) == {"delta_C", "N_c", "N_v", "grid_range", "objective_kind", "tool_version"}
    assert meta["tool_version"] == __version__


def test_empty_table_is_header_only(tmp_path):
    p = tmp_path / "e.csv"
    write_bounds_csv(BoundsTable(), p, sidecar=False)
    assert p.read_text() == "parameter,lower,upper,lower_status,upper_status\n"
    assert not sidecar_path(p).exists()
    assert len(read_bounds_csv(p)) == 0


def test_one_row_round_trips_bit_exactly(tmp_path):
    row = BoundsRow(1 / 3, np.nextafter(0.2, 1), 5e-324, "OPTIMAL", "OPTIMAL")
    p = tmp_path / "one.csv"
    write_bounds_csv(BoundsTable([row], {"N_v": 7}), p)
    back = read_bounds_csv(p)
    assert back.rows == [row]
    assert back.metadata == {"N_v": 7, "tool_version": __version__}


def test_bounds_read_rejects_bad_header(tmp_path):
    p = tmp_path / "b.csv"
    p.write_text("param,lo,hi\n")
    with pytest.raises(ParseError, match=r"b\.csv:1:"):
        read_bounds_csv(p)


def test_bounds_write_is_deterministic(tmp_path):
    a, b = tmp_path / "a.csv", tmp_path / "b.csv"
    write_bounds_csv(_golden_table(), a)
    write_bounds_csv(_golden_table(), b)
    assert a.read_bytes() == b.read_bytes()
    assert sidecar_path(a).read_bytes() == sidecar_path(b).read_bytes()


# -- result and model documents ---------------------------------------------------


def test_result_doc_matches_golden(tmp_path):
    r = GapResult(0.99995, 0.9, 1.5625e-6, (0.9999, 1.0),
                  {"outer_iterations": np.int64(12), "collapsed": np.bool_(True),
                   "z_range": (np.float64(0.89), 0.91)})
    p = tmp_path / "gap.json"
    write_result_doc(r, p)
    assert p.read_bytes() == (GOLDEN / "gap_result.json").read_bytes()
    back = read_result_doc(p)
    assert (back.m_opt, back.z_opt, back.delta_c_min, back.interval) == (
        r.m_opt, r.z_opt, r.delta_c_min, r.interval)


def test_plain_result_doc(tmp_path):
    p = tmp_path / "z.json"
    write_result_doc({"Z_phi": np.float64(0.9), "midpoints": np.array([0.1, 0.2])}, p)
    assert read_result_doc(p) == {"tool_version": __version__, "Z_phi": 0.9, "midpoints": [0.1, 0.2]}


def test_model_round_trip(tmp_path):
    m = reference_model(n=50)
    p = tmp_path / "m.json"
    write_model(m, p)
    back = read_model(p)
    assert back.pole_weight == m.pole_weight and back.pole_mass2 == m.pole_mass2
    np.testing.assert_array_equal(back.continuum, m.continuum)
    x = np.array([0.1, 1.0])
    np.testing.assert_array_equal(synth_correlator(back, x).values, synth_correlator(m, x).values)


def test_model_read_errors(tmp_path):
    p = tmp_path / "m.json"
    p.write_text('{"pole_weight": 1.0,\n "oops"}')
    with pytest.raises(ParseError, match=r"m\.json:2:"):
        read_model(p)
    p.write_text('{"pole_weight": 1.0}')
    with pytest.raises(ParseError, match="keys"):
        read_model(p)


# -- config -----------------------------------------------------------------------


def test_empty_document_gives_defaults(tmp_path):
    for text in ("", "{}", "\n"):
        p = tmp_path / "c.json"
        p.write_text(text)
        assert load_config(p) == RunConfig()
    d = RunConfig()
    assert (d.grid.s_min, d.grid.s_max, d.grid.N_v) == (0.0, 60.0, 10_000)
    assert (d.constraints.x_lo, d.constraints.x_hi, d.constraints.N_c) == (1e-5, 3.0, 100)
    assert d.bisection.delta_hi == 1e-2 and d.bisection.mass_resolution == 1e-4


def test_n_v_override_reaches_the_lp(tmp_path):
    p = tmp_path / "c.json"
    p.write_text('{"grid": {"N_v": 20000}, "constraints": {"N_c": 10}}')
    cfg = load_config(p)
    corr = CorrelatorSet(cfg.constraint_points(), np.full(10, 0.1))
    lp = build_bound_problem(corr, cfg.spectral_grid(), Window(0.0, 1.0))
    assert lp.n == 20000


def test_unknown_key_is_named():
    with pytest.raises(ConfigError, match="N_w"):
        config_from_dict({"grid": {"N_w": 5}})


def test_all_problems_listed_at_once():
    with pytest.raises(ConfigError) as info:
        config_from_dict({"grid": {"N_w": 5, "s_max": "big"}, "solvr": {}, "input": {"slack": None}})
    probs = info.value.problems
    assert len(probs) == 4
    text = str(info.value)
    for needle in ("N_w", "s_max", "solvr", "slack"):
        assert needle in text


def test_value_problems_listed_at_once():
    with pytest.raises(ConfigError) as info:
        config_from_dict({"grid": {"s_min": 5.0, "s_max": 1.0},
                          "constraints": {"spacing": "cubic"},
                          "bisection": {"threshold_factor": 5, "m_lo": 2.0}})
    assert len(info.value.problems) == 4


def test_config_json_syntax_error_names_line(tmp_path):
    p = tmp_path / "c.json"
    p.write_text('{\n  "grid": {\n    "N_v": 10,\n  }\n}')
    with pytest.raises(ConfigError, match=r"c\.json:4"):
        load_config(p)


def test_integer_types():
    assert config_from_dict({"grid": {"N_v": 500.0}}).grid.N_v == 500
    with pytest.raises(ConfigError):
        config_from_dict({"grid": {"N_v": 500.5}})
    with pytest.raises(ConfigError):
        config_from_dict({"grid": {"N_v": True}})


def test_config_round_trip_through_dict():
    cfg = RunConfig().replace(grid__N_v=123, objective__mass=1.0, solver__workers=2)
    assert cfg.grid.N_v == 123 and cfg.workers == 2
    assert config_from_dict(json.loads(json.dumps(cfg.to_dict()))) == cfg


def test_schema_covers_every_key():
    keys = {(sec, key) for sec, key, _, _ in RunConfig.schema()}
    assert ("grid", "N_v") in keys and ("bisection", "split") in keys
    assert len(keys) == len(RunConfig.schema())
