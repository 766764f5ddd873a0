"""Report assembly and rendering tests."""

import json

import numpy as np
import pytest

from skitrain.angles import ANGLE_FIELDS, AngleSeries
from skitrain.calibration import CalibrationProfile
from skitrain.motion import UniformSeries
from skitrain.report import (
    RunRecord,
    analysis_to_json,
    build_analysis,
    render_csvs,
    render_markdown,
    render_plotdata,
)
from skitrain.sim import PlayerState, RunLog, RunOutcome, SimParams


def _record(seed, level, avatar, n=600):
    rng = np.random.default_rng(seed)
    head = np.zeros((n, 6))
    head[:, 0] = 0.2 * np.sin(np.arange(n) * 0.11)
    head[:, 1] = 1.6 - 0.05 * np.abs(np.sin(np.arange(n) * 0.05))
    head[:, 2] = 0.15 * np.cos(np.arange(n) * 0.07)
    head[:, 3:] = 0.05 * rng.normal(size=(n, 3))
    cols = {}
    for i, f in enumerate(ANGLE_FIELDS):
        cols[f] = 0.1 * rng.normal(size=n)
    cols["sagittal_plane"] = 0.6 * head[:, 0] + 0.002 * rng.normal(size=n)
    cols["frontal_plane"] = -0.5 * head[:, 2] + 0.002 * rng.normal(size=n)
    from skitrain.calibration import ControlInput

    state = PlayerState(0.0, 0.0, 0.0, 0.0, 0.0, 3, 12.0)
    log = RunLog(
        level_seed=seed, avatar=avatar, params=SimParams(),
        profile=CalibrationProfile(0.2, 0.2, 0.2, 0.2, 1.6, 0.05),
        state0=state, inputs=(ControlInput(0.0, 0.0, False),), states=(state,), events=(),
        outcome=RunOutcome(True, 12.0, "goal", head_path_length=2.0 + level))
    return RunRecord(
        run_log=log,
        angle_series=AngleSeries(rate=25.0, start=0.0, columns=cols),
        head_series=UniformSeries(rate=25.0, start=0.0, values=head),
        level_id=level, avatar=avatar)


@pytest.fixture(scope="module")
def analysis():
    records = [_record(s, lvl, bool(s % 2))
               for lvl in (1, 2) for s in range(4)]
    return build_analysis(records)


class TestBuildAnalysis:
    def test_strong_pair_classified_very_high(self, analysis):
        cell = analysis["correlation"]["x:sagittal_plane"]
        assert cell["meanAbsR"] >= 0.9
        assert cell["category"] == "very high"
        assert cell["maxP"] < 0.01

    def test_level_summaries_present(self, analysis):
        assert set(analysis["angleMovement"]) == {"1", "2"}
        assert analysis["deviationToFirstLevel"]["1"] is None
        assert analysis["deviationToFirstLevel"]["2"] is not None
        assert analysis["headDistance"]["1:w"]["mean"] == pytest.approx(3.0)
        assert analysis["headDistance"]["2:wo"]["mean"] == pytest.approx(4.0)

    def test_plot_pairs_have_band_and_scatter(self, analysis):
        plot = analysis["plots"]["x:sagittal_plane"]
        assert len(plot["band"]) == 50
        assert len(plot["scatter"]) >= 100
        for x, y, lo, hi in plot["band"]:
            assert lo <= y <= hi


class TestRendering:
    def test_markdown_sections(self, analysis):
        md = render_markdown(analysis)
        assert "## 1. Correlation" in md
        assert "## 2. Maximum movement" in md
        assert "## 3. Head travel" in md
        assert "[very high]" in md
        assert "Significance caveat" in md
        assert "future work" in md
        assert render_markdown(analysis) == md  # deterministic

    def test_csvs_parse(self, analysis):
        import csv as csvmod
        import io

        out = render_csvs(analysis)
        assert set(out) == {"correlation.csv", "angle_movement.csv", "head_distance.csv"}
        rows = list(csvmod.reader(io.StringIO(out["correlation.csv"])))
        assert rows[0] == ["poseChannel", "angle", "meanAbsR", "category", "maxP", "minN", "runs"]
        assert len(rows) == 1 + 6 * 9

    def test_plotdata_and_analysis_json_serialize(self, analysis):
        payload = json.dumps(render_plotdata(analysis))
        assert "x:sagittal_plane" in payload
        text = analysis_to_json(analysis)
        assert json.loads(text)["version"] == analysis["version"]
