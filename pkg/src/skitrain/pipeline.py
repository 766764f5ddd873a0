"""End-to-end synthetic experiment: cohort in, analysis report out.

Reproduces the full workflow on synthetic subjects: calibrate each subject,
generate the levels, rehearse a skier trace per (subject, level), replay it
headless, derive skeletons through the kinematic chain, extract body-angle
series and aggregate statistics into the report. Every artifact is a pure
function of the master seed.
"""

from __future__ import annotations

import json
import os
from dataclasses import dataclass

from .angles import angles_from_arrays, save_angle_csv
from .calibration import run_calibration, save_profile
from .motion import UniformSeries, resample_head_trace, save_head_csv
from .report import RunRecord, analysis_to_json, build_analysis, render_csvs, render_markdown, render_plotdata
from .rng import derive_seed
from .sim import SimParams, run_headless, save_runlog, synthesize_skier_trace
from .subject import BodyModel, calibration_session, skeleton_arrays, upright_frames
from .terrain import difficulty_preset, generate_level, load_level, save_level
from .util import atomic_write_text

ANALYSIS_RATE = 25.0  # skeleton-stream clock the analysis runs on


@dataclass(frozen=True)
class PipelineConfig:
    subjects: int = 10
    master_seed: int = 1
    levels: tuple[int, ...] = (1, 2, 3)
    aggressiveness: float = 0.7
    sim_params: SimParams = SimParams()


def subject_record(level, profile, trace, run_log, model: BodyModel,
                   level_id: int, avatar: bool) -> RunRecord:
    """Analytics for one completed run: skeleton chain + angle extraction."""
    head25 = resample_head_trace(trace, ANALYSIS_RATE)
    ref = estimate_reference(model, profile)
    pos, valid = skeleton_arrays(head25.values[:, :3], model, profile)
    series = angles_from_arrays(pos, valid, ref, rate=ANALYSIS_RATE, start=head25.start)
    return RunRecord(run_log=run_log, angle_series=series, head_series=head25,
                     level_id=level_id, avatar=avatar)


def estimate_reference(model: BodyModel, profile):
    from .motion import estimate_reference_frame

    return estimate_reference_frame(upright_frames(model, profile))


def run_synthetic_pipeline(out_dir, config: PipelineConfig = PipelineConfig()) -> dict:
    """Run the whole synthetic experiment; returns the analysis dict."""
    os.makedirs(out_dir, exist_ok=True)
    levels_dir = os.path.join(out_dir, "levels")
    runs_dir = os.path.join(out_dir, "runs")
    profiles_dir = os.path.join(out_dir, "profiles")
    for d in (levels_dir, runs_dir, profiles_dir):
        os.makedirs(d, exist_ok=True)

    model = BodyModel()
    levels = {}
    manifest = {"version": 1, "masterSeed": config.master_seed, "runs": []}

    for lvl in config.levels:
        params = difficulty_preset(lvl, seed=derive_seed(config.master_seed, "level", lvl))
        level = generate_level(params)
        path = os.path.join(levels_dir, f"level_{lvl}.json")
        save_level(path, level)
        # reload so this path and any external consumer of the file see the
        # same float32-rounded terrain
        levels[lvl] = (load_level(path), path)

    records = []
    for i in range(config.subjects):
        cal_seed = derive_seed(config.master_seed, "subject", i)
        cal_trace, schedule = calibration_session(cal_seed)
        profile = run_calibration(cal_trace, schedule)
        profile_path = os.path.join(profiles_dir, f"subject_{i:02d}.json")
        save_profile(profile_path, profile)
        avatar = i % 2 == 0

        for lvl in config.levels:
            level, level_path = levels[lvl]
            trace_seed = derive_seed(config.master_seed, "trace", i, lvl)
            trace = synthesize_skier_trace(
                level.track, profile, config.aggressiveness,
                level=level, sim_params=config.sim_params, seed=trace_seed)
            run_log = run_headless(level, profile, trace, config.sim_params, avatar=avatar)

            stem = f"run_s{i:02d}_l{lvl}"
            trace_path = os.path.join(runs_dir, stem + ".trace.csv")
            runlog_path = os.path.join(runs_dir, stem + ".runlog.jsonl")
            angles_path = os.path.join(runs_dir, stem + ".angles.csv")
            save_head_csv(trace_path, trace)
            save_runlog(runlog_path, run_log)

            rec = subject_record(level, profile, trace, run_log, model, lvl, avatar)
            save_angle_csv(angles_path, rec.angle_series)
            records.append(rec)
            manifest["runs"].append({
                "subject": i, "level": lvl, "avatar": avatar,
                "profile": os.path.relpath(profile_path, out_dir),
                "levelFile": os.path.relpath(level_path, out_dir),
                "trace": os.path.relpath(trace_path, out_dir),
                "runlog": os.path.relpath(runlog_path, out_dir),
                "angles": os.path.relpath(angles_path, out_dir),
                "finished": run_log.outcome.finished,
                "score": run_log.states[-1].score if run_log.states else 0,
            })

    analysis = build_analysis(records)
    write_report_files(out_dir, analysis)
    atomic_write_text(os.path.join(out_dir, "runs.json"),
                      json.dumps(manifest, sort_keys=True) + "\n")
    return analysis


def write_report_files(out_dir, analysis: dict) -> None:
    os.makedirs(out_dir, exist_ok=True)
    atomic_write_text(os.path.join(out_dir, "analysis.json"), analysis_to_json(analysis))
    atomic_write_text(os.path.join(out_dir, "report.md"), render_markdown(analysis))
    for name, text in render_csvs(analysis).items():
        atomic_write_text(os.path.join(out_dir, name), text)
    atomic_write_text(os.path.join(out_dir, "plotdata.json"),
                      json.dumps(render_plotdata(analysis), sort_keys=True) + "\n")


def load_manifest_records(out_dir) -> list[RunRecord]:
    """Rebuild RunRecords from a pipeline output directory."""
    import numpy as np

    from .angles import load_angle_csv
    from .motion import load_head_csv
    from .sim import load_runlog

    with open(os.path.join(out_dir, "runs.json")) as fh:
        manifest = json.load(fh)
    records = []
    for entry in manifest["runs"]:
        run_log = load_runlog(os.path.join(out_dir, entry["runlog"]))
        series = load_angle_csv(os.path.join(out_dir, entry["angles"]))
        trace = load_head_csv(os.path.join(out_dir, entry["trace"]))
        head25 = resample_head_trace(trace, ANALYSIS_RATE)
        records.append(RunRecord(run_log=run_log, angle_series=series, head_series=head25,
                                 level_id=int(entry["level"]), avatar=bool(entry["avatar"])))
    return records
