"""Command-line entry point wiring the modules into reproducible workflows.

Exit codes: 0 success, 1 runtime/domain error, 2 usage or input validation
error. All randomness flows from --seed flags, so any command rerun with
the same flags produces byte-identical outputs.
"""

from __future__ import annotations

import functools
import json
import os
import sys

import click

from . import __version__
from .angles import angle_series, save_angle_csv, select_cameras
from .calibration import load_profile, load_schedule, run_calibration, save_profile
from .errors import (
    DegenerateRange,
    InsufficientCalibrationData,
    InvalidInput,
    SkiTrainError,
    UnknownLevel,
)
from .motion import (
    Confidence,
    estimate_reference_frame,
    load_head_csv,
    load_skeleton_jsonl,
    save_head_csv,
)
from .pipeline import PipelineConfig, load_manifest_records, run_synthetic_pipeline, write_report_files
from .report import build_analysis
from .sim import SimParams, load_runlog, run_headless, save_runlog, synthesize_skier_trace
from .terrain import difficulty_preset, generate_level, heightmap_to_pgm, load_level, save_level
from .util import atomic_write_bytes

_USAGE_ERRORS = (UnknownLevel, InvalidInput, InsufficientCalibrationData,
                 DegenerateRange, FileNotFoundError)


def _command_errors(fn):
    @functools.wraps(fn)
    def wrapper(*args, **kwargs):
        try:
            return fn(*args, **kwargs)
        except _USAGE_ERRORS as e:
            click.echo(f"{type(e).__name__}: {e}", err=True)
            sys.exit(2)
        except SkiTrainError as e:
            click.echo(f"{type(e).__name__}: {e}", err=True)
            sys.exit(1)
    return wrapper


@click.group()
@click.version_option(version=__version__, prog_name="skitrain")
def main():
    """Ski-trainer simulation, calibration and motion analytics."""


@main.command("gen-level")
@click.option("--level", type=int, required=True, help="Difficulty preset: 1, 2 or 3.")
@click.option("--seed", type=int, default=0, show_default=True)
@click.option("--out", type=click.Path(dir_okay=False), required=True)
@click.option("--pgm", type=click.Path(dir_okay=False), default=None,
              help="Also dump the heightmap as an ASCII PGM image.")
@_command_errors
def cmd_gen_level(level, seed, out, pgm):
    """Generate a level file from a difficulty preset."""
    params = difficulty_preset(level, seed=seed)
    lvl = generate_level(params)
    save_level(out, lvl)
    if pgm:
        atomic_write_bytes(pgm, heightmap_to_pgm(lvl.heightmap))
    click.echo(f"level {level} seed {seed} -> {out} "
               f"({lvl.track.total_length:.1f} m, {len(lvl.props.cubes)} cubes)")


@main.command("calibrate")
@click.option("--head", "head_path", type=click.Path(dir_okay=False), required=True,
              help="Head-pose CSV recorded during the guided lean prompts.")
@click.option("--schedule", "schedule_path", type=click.Path(dir_okay=False), required=True,
              help="JSON with the five prompt windows.")
@click.option("--out", type=click.Path(dir_okay=False), required=True)
@click.option("--stance-fraction", type=float, default=0.25, show_default=True)
@_command_errors
def cmd_calibrate(head_path, schedule_path, out, stance_fraction):
    """Extract a calibration profile from a guided lean recording."""
    trace = load_head_csv(head_path)
    schedule = load_schedule(schedule_path)
    profile = run_calibration(trace, schedule, stance_fraction=stance_fraction)
    save_profile(out, profile)
    click.echo(f"profile -> {out} (xL {profile.x_left:.3f} m, xR {profile.x_right:.3f} m, "
               f"zF {profile.z_front:.3f} m, zB {profile.z_back:.3f} m)")


@main.command("simulate")
@click.option("--level", "level_path", type=click.Path(dir_okay=False), required=True)
@click.option("--profile", "profile_path", type=click.Path(dir_okay=False), required=True)
@click.option("--trace", "trace_path", type=click.Path(dir_okay=False), required=True)
@click.option("--out", type=click.Path(dir_okay=False), required=True)
@click.option("--avatar/--no-avatar", default=False,
              help="Record the avatar-visible metadata flag in the run log.")
@_command_errors
def cmd_simulate(level_path, profile_path, trace_path, out, avatar):
    """Replay a head-pose trace through the simulation headlessly."""
    level = load_level(level_path)
    profile = load_profile(profile_path)
    trace = load_head_csv(trace_path)
    log = run_headless(level, profile, trace, SimParams(), avatar=avatar)
    save_runlog(out, log)
    score = log.states[-1].score if log.states else 0
    click.echo(f"run -> {out} (finished={log.outcome.finished} score={score} "
               f"head_path={log.outcome.head_path_length:.2f} m)")


@main.command("synth-trace")
@click.option("--level", "level_path", type=click.Path(dir_okay=False), required=True)
@click.option("--profile", "profile_path", type=click.Path(dir_okay=False), required=True)
@click.option("--out", type=click.Path(dir_okay=False), required=True)
@click.option("--aggressiveness", type=float, default=0.7, show_default=True)
@click.option("--seed", type=int, default=0, show_default=True)
@click.option("--open-loop", is_flag=True,
              help="Pure curvature-feedforward trace instead of the rehearsed one.")
@_command_errors
def cmd_synth_trace(level_path, profile_path, out, aggressiveness, seed, open_loop):
    """Synthesize an ideal-skier head trace for a level."""
    level = load_level(level_path)
    profile = load_profile(profile_path)
    trace = synthesize_skier_trace(
        level.track, profile, aggressiveness,
        level=None if open_loop else level, seed=seed)
    save_head_csv(out, trace)
    click.echo(f"trace -> {out} ({len(trace)} samples, {trace[-1].t:.1f} s)")


_CONF = {"none": Confidence.NONE, "low": Confidence.LOW,
         "medium": Confidence.MEDIUM, "high": Confidence.HIGH}


@main.command("angles")
@click.option("--skeleton", "skeleton_path", type=click.Path(dir_okay=False), required=True,
              help="Skeleton JSONL from tracking camera 1.")
@click.option("--skeleton2", "skeleton2_path", type=click.Path(dir_okay=False), default=None,
              help="Optional second camera stream.")
@click.option("--out", type=click.Path(dir_okay=False), required=True)
@click.option("--min-conf", type=click.Choice(sorted(_CONF)), default="medium",
              show_default=True)
@click.option("--rate", type=float, default=25.0, show_default=True)
@click.option("--upright-window", type=float, default=2.0, show_default=True,
              help="Leading seconds of upright stance used for the reference.")
@_command_errors
def cmd_angles(skeleton_path, skeleton2_path, out, min_conf, rate, upright_window):
    """Extract the nine body-angle series from skeleton recordings."""
    streams = {1: load_skeleton_jsonl(skeleton_path)}
    if skeleton2_path:
        streams[2] = load_skeleton_jsonl(skeleton2_path)
    primary = streams[1]
    if not primary:
        raise InvalidInput("skeleton stream is empty")
    t0 = primary[0].t
    upright = [f for f in primary if f.t <= t0 + upright_window]
    ref = estimate_reference_frame(upright)
    assignment = select_cameras(streams)
    rest = {cam: [f for f in fs if f.t > t0 + upright_window]
            for cam, fs in streams.items()}
    series = angle_series(rest, ref, assignment=assignment,
                          min_conf=_CONF[min_conf], rate=rate)
    save_angle_csv(out, series)
    click.echo(f"angles -> {out} ({len(series)} rows at {rate:g} Hz)")


@main.command("analyze")
@click.option("--run-dir", type=click.Path(file_okay=False), required=True,
              help="Pipeline output directory holding runs.json.")
@click.option("--out-dir", type=click.Path(file_okay=False), default=None,
              help="Where to write the report files (defaults to --run-dir).")
@_command_errors
def cmd_analyze(run_dir, out_dir):
    """Recompute the analysis and report from stored run artifacts."""
    records = load_manifest_records(run_dir)
    analysis = build_analysis(records)
    write_report_files(out_dir or run_dir, analysis)
    click.echo(f"analysis of {len(records)} runs -> {out_dir or run_dir}")


@main.command("report")
@click.option("--analysis", "analysis_path", type=click.Path(dir_okay=False), required=True)
@click.option("--out-dir", type=click.Path(file_okay=False), required=True)
@_command_errors
def cmd_report(analysis_path, out_dir):
    """Render report files from a stored analysis.json."""
    with open(analysis_path) as fh:
        analysis = json.load(fh)
    os.makedirs(out_dir, exist_ok=True)
    write_report_files(out_dir, analysis)
    click.echo(f"report -> {out_dir}")


@main.command("pipeline")
@click.option("--out-dir", type=click.Path(file_okay=False), required=True)
@click.option("--synthetic", type=int, default=10, show_default=True,
              help="Number of synthetic subjects.")
@click.option("--seed", type=int, default=1, show_default=True)
@click.option("--levels", type=str, default="1,2,3", show_default=True)
@click.option("--aggressiveness", type=float, default=0.7, show_default=True)
@_command_errors
def cmd_pipeline(out_dir, synthetic, seed, levels, aggressiveness):
    """Full synthetic experiment: calibrate, ski, analyze, report."""
    try:
        level_ids = tuple(int(tok) for tok in levels.split(",") if tok.strip())
    except ValueError:
        raise InvalidInput(f"bad --levels value {levels!r}") from None
    if synthetic < 1:
        raise InvalidInput("--synthetic must be at least 1")
    for lvl in level_ids:
        difficulty_preset(lvl)  # validate before doing any work
    config = PipelineConfig(subjects=synthetic, master_seed=seed, levels=level_ids,
                            aggressiveness=aggressiveness)
    analysis = run_synthetic_pipeline(out_dir, config)
    finished = sum(1 for r in analysis["runs"] if r["finished"])
    click.echo(f"pipeline -> {out_dir} ({len(analysis['runs'])} runs, {finished} finished)")


@main.command("serve")
@click.option("--bind", type=str, default="127.0.0.1:8777", show_default=True)
@click.option("--tick-hz", type=float, default=50.0, show_default=True)
@click.option("--log-dir", type=click.Path(file_okay=False), default=None,
              help="Directory for persisted run logs.")
@_command_errors
def cmd_serve(bind, tick_hz, log_dir):
    """Run the realtime WebSocket session server."""
    from .service import serve

    host, _, port = bind.rpartition(":")
    if not host or not port.isdigit():
        raise InvalidInput(f"--bind must be host:port, got {bind!r}")
    serve(host, int(port), tick_hz=tick_hz, log_dir=log_dir)


@main.command("replay")
@click.option("--runlog", "runlog_path", type=click.Path(dir_okay=False), required=True)
@_command_errors
def cmd_replay(runlog_path):
    """Print a short summary of a stored run log."""
    log = load_runlog(runlog_path)
    score = log.states[-1].score if log.states else 0
    click.echo(json.dumps({
        "levelSeed": log.level_seed, "avatar": log.avatar,
        "steps": len(log.states), "events": len(log.events), "score": score,
        "finished": log.outcome.finished, "finishTime": log.outcome.finish_time,
        "headPathLength": log.outcome.head_path_length,
    }, sort_keys=True))


if __name__ == "__main__":
    main()
