"""Experiment driver: run a tracker over a sequence, score it, emit files.

The failure protocol mirrors the evaluation it reproduces: whenever a
target's estimated position strays more than the threshold from
groundtruth, a failure is recorded and every particle of that target is
snapped to the true pose, so one mistake cannot cascade through the rest of
the run. Lost and switched trackers are counted identically.

All delimited outputs are deterministic functions of (config, seed); wall
clock appears only in report.txt.
"""

from __future__ import annotations

import json
import math
import os
import time
from dataclasses import dataclass, fields, is_dataclass, replace

import numpy as np

from .appearance import TemplateModel, learn_template, load_patches_dir
from .config import RunConfig
from .csvio import expect_header, fmt_float, read_rows, write_rows
from .geometry import Frame, PatchDims, sample_patch
from .interaction import InteractionParams, build_mrf
from .motion import MotionParams
from .pgm import PgmError, read_pgm, write_pgm
from .samplers import (
    CondensationConfig,
    McmcConfig,
    SampleSet,
    TrackEstimate,
    WeightedParticleSet,
    condensation_step,
    mcmc_mrf_step,
)
from .simulate import GroundTruthTrack, ScenarioConfig, simulate_sequence

METRICS_HEADER = ["frame", "target", "dist_px", "failed"]
ESTIMATES_HEADER = ["frame", "target", "x", "y", "theta"]
DIAGNOSTICS_HEADER = ["frame", "acceptance_rate", "mean_ess"]
SUMMARY_HEADER = [
    "tracker",
    "frames",
    "targets",
    "failures",
    "equivalent_failures",
    "mean_dist_px",
    "max_dist_px",
    "acceptance_rate_mean",
]


class InputError(RuntimeError):
    """Unreadable or inconsistent input files; message includes the path."""


@dataclass
class FrameMetrics:
    frame: int
    distances: np.ndarray
    failed_ids: tuple

    @property
    def failures(self) -> int:
        return len(self.failed_ids)

    @property
    def mean_dist(self) -> float:
        return float(self.distances.mean())


@dataclass
class RunReport:
    tracker: str
    n_frames: int
    n_targets: int
    total_failures: int
    equivalent_failures: int | None
    mean_distance: float
    max_distance: float
    acceptance_rate_mean: float | None
    mean_ess: float | None
    metrics: list
    config_echo: dict
    wall_clock_s: float
    output_dir: str


class McmcMrfTracker:
    """Joint MCMC filter; the MRF is rebuilt each frame from the previous
    frame's (possibly corrected) estimates."""

    kind = "mcmc-mrf"

    def __init__(self, init_poses, model: TemplateModel, motion: MotionParams,
                 interaction: InteractionParams, n_samples: int, burn_in: int,
                 rng: np.random.Generator):
        self._cfg = McmcConfig(n_samples=n_samples, burn_in=burn_in,
                               motion=motion, interaction=interaction)
        self._model = model
        self._rng = rng
        self._samples = SampleSet.replicate(init_poses, n_samples)
        self._reference = np.array(init_poses, dtype=np.float64)

    def step(self, frame: Frame) -> TrackEstimate:
        graph = build_mrf(self._reference, self._cfg.interaction)
        self._samples, est = mcmc_mrf_step(
            self._samples, frame, self._model, graph, self._cfg, self._rng
        )
        self._reference = est.poses.copy()
        return est

    def correct(self, i: int, pose) -> None:
        arr = self._samples.samples.copy()
        arr[:, i, :] = pose
        self._samples = SampleSet(arr, acceptance_rate=self._samples.acceptance_rate)
        self._reference[i] = pose

    @property
    def acceptance_rate(self) -> float | None:
        return self._samples.acceptance_rate

    @property
    def mean_ess(self) -> float | None:
        return None


class IndependentTracker:
    """One weighted particle filter per target, no coupling."""

    kind = "independent"

    def __init__(self, init_poses, model: TemplateModel, motion: MotionParams,
                 m_particles: int, rng: np.random.Generator):
        self._cfg = CondensationConfig(m_particles=m_particles, motion=motion)
        self._model = model
        self._rng = rng
        self._set = WeightedParticleSet.replicate(init_poses, m_particles)

    def step(self, frame: Frame) -> TrackEstimate:
        self._set, est = condensation_step(self._set, frame, self._model, self._cfg, self._rng)
        return est

    def correct(self, i: int, pose) -> None:
        s = self._set.samples.copy()
        w = self._set.weights.copy()
        s[i, :, :] = pose
        w[i, :] = 1.0 / w.shape[1]
        self._set = WeightedParticleSet(s, w, uniform_fallback=self._set.uniform_fallback)

    @property
    def acceptance_rate(self) -> float | None:
        return None

    @property
    def mean_ess(self) -> float | None:
        return float(self._set.ess.mean())


def detect_and_correct(estimate: TrackEstimate, truth_poses, threshold_px: float, tracker):
    """Snap every target whose position error exceeds the threshold.

    Returns (failed target ids, tracker); the tracker is corrected in
    place, full particle population included, so the next frame restarts
    from truth.
    """
    truth = np.asarray(truth_poses, dtype=np.float64)
    if truth.shape != estimate.poses.shape:
        raise ValueError(
            f"estimate covers {estimate.poses.shape[0]} targets, truth {truth.shape[0]}"
        )
    d = np.hypot(estimate.x - truth[:, 0], estimate.y - truth[:, 1])
    failed = tuple(int(i) for i in np.nonzero(d > threshold_px)[0])
    for i in failed:
        tracker.correct(i, truth[i])
    return failed, tracker


def scale_failures(count: int, frames_observed: int, frames_reference: int) -> int:
    """Linear scaling of a failure count to a reference frame count."""
    if frames_observed < 1:
        raise ValueError(f"frames_observed must be >= 1, got {frames_observed}")
    return int(math.floor(count * frames_reference / frames_observed + 0.5))


def mean_distance_series(metrics) -> np.ndarray:
    """Per-frame mean distance to groundtruth."""
    if not metrics:
        raise ValueError("no frame metrics")
    return np.array([m.mean_dist for m in metrics])


def quantize_frame(frame: Frame) -> Frame:
    """Round to the 8-bit grid so simulated and file-loaded frames match."""
    return Frame(np.rint(frame.pixels * np.float32(255.0)) / np.float32(255.0))


def learn_scenario_template(frame: Frame, truth_poses, dims: PatchDims,
                            background_min_clearance: float | None = None) -> TemplateModel:
    """Templates from the first frame: agent patches at the true poses,
    background patches on a grid well clear of every agent."""
    truth = np.asarray(truth_poses, dtype=np.float64)
    fg = [sample_patch(frame, pose, dims) for pose in truth]
    if len(fg) == 1:
        fg = fg * 2

    clearance = background_min_clearance
    if clearance is None:
        clearance = 1.5 * math.hypot(dims.length, dims.width)
    half = 0.5 * math.hypot(dims.length, dims.width) + 1.0
    want = max(len(fg), 8)
    bg = []
    step = max(dims.length, dims.width)
    y = half
    while y <= frame.height - 1 - half and len(bg) < want:
        x = half
        while x <= frame.width - 1 - half and len(bg) < want:
            dmin = np.hypot(truth[:, 0] - x, truth[:, 1] - y).min()
            if dmin > clearance:
                bg.append(sample_patch(frame, (x, y, 0.0), dims))
            x += step
        y += step
    if len(bg) < 2:
        raise ValueError("not enough agent-free area to learn a background template")

    mu_f, sigma_f = learn_template(fg, dims)
    mu_b, sigma_b = learn_template(bg, dims)
    return TemplateModel(mu_f=mu_f, sigma_f=sigma_f, mu_b=mu_b, sigma_b=sigma_b, dims=dims)


def load_template_dir(path: str | os.PathLike, dims: PatchDims) -> TemplateModel:
    """Learn both template sides from PGM patches in foreground/ and
    background/ subdirectories."""
    try:
        fg = load_patches_dir(os.path.join(path, "foreground"), dims)
        bg = load_patches_dir(os.path.join(path, "background"), dims)
    except (OSError, ValueError) as e:
        raise InputError(f"template_dir {path}: {e}") from e
    if len(fg) == 1:
        fg = fg * 2
    if len(bg) == 1:
        bg = bg * 2
    try:
        mu_f, sigma_f = learn_template(fg, dims)
        mu_b, sigma_b = learn_template(bg, dims)
        return TemplateModel(mu_f=mu_f, sigma_f=sigma_f, mu_b=mu_b, sigma_b=sigma_b, dims=dims)
    except ValueError as e:
        raise InputError(f"template_dir {path}: {e}") from e


FRAME_NAME = "frame_%06d.pgm"


def list_frame_files(frames_dir: str | os.PathLike) -> list[str]:
    """Frame files named frame_000001.pgm ...; numbering must be 1..T."""
    try:
        names = sorted(n for n in os.listdir(frames_dir) if n.startswith("frame_") and n.endswith(".pgm"))
    except OSError as e:
        raise InputError(f"cannot list frames_dir {frames_dir}: {e}") from e
    if not names:
        raise InputError(f"frames_dir {frames_dir} contains no frame_*.pgm files")
    for t, name in enumerate(names, start=1):
        if name != FRAME_NAME % t:
            raise InputError(f"frames_dir {frames_dir}: expected {FRAME_NAME % t}, found {name}")
    return [os.path.join(frames_dir, n) for n in names]


def _iter_file_frames(paths, truth: GroundTruthTrack):
    for t, path in enumerate(paths, start=1):
        try:
            frame = read_pgm(path)
        except (OSError, PgmError) as e:
            raise InputError(f"cannot read frame {path}: {e}") from e
        yield t, truth.frame_poses(t), frame


def _iter_scenario_frames(scenario: ScenarioConfig):
    for t, world, frame in simulate_sequence(scenario):
        yield t, world.poses, quantize_frame(frame)


def _config_echo(obj):
    if is_dataclass(obj) and not isinstance(obj, type):
        return {f.name: _config_echo(getattr(obj, f.name)) for f in fields(obj)}
    if hasattr(obj, "_asdict"):
        return {k: _config_echo(v) for k, v in obj._asdict().items()}
    if isinstance(obj, np.ndarray):
        return obj.tolist()
    if isinstance(obj, (list, tuple)):
        return [_config_echo(v) for v in obj]
    if isinstance(obj, (np.integer,)):
        return int(obj)
    if isinstance(obj, (np.floating,)):
        return float(obj)
    return obj


def _resolve_template(cfg: RunConfig, first_frame: Frame, init_poses) -> TemplateModel:
    if cfg.template is not None:
        return cfg.template
    if cfg.template_dir is not None:
        return load_template_dir(cfg.template_dir, cfg.dims)
    return learn_scenario_template(first_frame, init_poses, cfg.dims)


def make_tracker(cfg: RunConfig, init_poses, model: TemplateModel, rng: np.random.Generator):
    if cfg.tracker == "mcmc-mrf":
        return McmcMrfTracker(init_poses, model, cfg.motion, cfg.interaction,
                              cfg.n_samples, cfg.burn_in, rng)
    return IndependentTracker(init_poses, model, cfg.motion, cfg.m_particles, rng)


def _annotate(frame: Frame, est_poses) -> Frame:
    img = frame.pixels.copy()
    h, w = img.shape
    for x, y, _ in est_poses:
        xi = int(round(float(x)))
        yi = int(round(float(y)))
        if 0 <= yi < h:
            img[yi, max(0, xi - 4): min(w, xi + 5)] = 1.0
        if 0 <= xi < w:
            img[max(0, yi - 4): min(h, yi + 5), xi] = 1.0
    return Frame(img)


def run_experiment(cfg: RunConfig) -> RunReport:
    """Run one tracker over one sequence; write metrics, estimates,
    diagnostics, summary, report, and the run figure to cfg.output_dir."""
    t0 = time.perf_counter()

    if cfg.scenario is not None:
        stream = _iter_scenario_frames(cfg.scenario)
        n_frames = cfg.scenario.n_frames
        truth_track = None
    else:
        paths = list_frame_files(cfg.frames_dir)
        try:
            truth_track = GroundTruthTrack.read_csv(cfg.groundtruth)
        except (OSError, ValueError) as e:
            raise InputError(f"cannot read groundtruth {cfg.groundtruth}: {e}") from e
        if truth_track.n_frames != len(paths):
            raise InputError(
                f"groundtruth {cfg.groundtruth} covers {truth_track.n_frames} frames "
                f"but {cfg.frames_dir} holds {len(paths)}"
            )
        stream = _iter_file_frames(paths, truth_track)
        n_frames = len(paths)

    first_t, init_poses, first_frame = next(stream)
    init_poses = np.array(init_poses, dtype=np.float64)
    n_targets = init_poses.shape[0]
    model = _resolve_template(cfg, first_frame, init_poses)
    rng = np.random.default_rng(cfg.rng_seed)
    tracker = make_tracker(cfg, init_poses, model, rng)

    os.makedirs(cfg.output_dir, exist_ok=True)
    annotate_dir = None
    if cfg.annotate:
        annotate_dir = os.path.join(cfg.output_dir, "annotated")
        os.makedirs(annotate_dir, exist_ok=True)

    metrics: list[FrameMetrics] = []
    est_rows: list[list[str]] = []
    diag_rows: list[list[str]] = []
    truth_poses_log = [init_poses]
    acc_rates: list[float] = []
    ess_means: list[float] = []

    init_est = TrackEstimate(init_poses)
    metrics.append(FrameMetrics(first_t, np.zeros(n_targets), ()))
    _append_estimate_rows(est_rows, first_t, init_est)
    if annotate_dir is not None:
        write_pgm(_annotate(first_frame, init_est.poses), os.path.join(annotate_dir, FRAME_NAME % first_t))

    for t, truth_poses, frame in stream:
        truth_poses = np.array(truth_poses, dtype=np.float64)
        if cfg.scenario is not None:
            truth_poses_log.append(truth_poses)
        est = tracker.step(frame)
        d = np.hypot(est.x - truth_poses[:, 0], est.y - truth_poses[:, 1])
        failed, _ = detect_and_correct(est, truth_poses, cfg.failure_threshold_px, tracker)
        metrics.append(FrameMetrics(t, d, failed))
        _append_estimate_rows(est_rows, t, est)
        acc = tracker.acceptance_rate
        ess = tracker.mean_ess
        if acc is not None:
            acc_rates.append(acc)
        if ess is not None:
            ess_means.append(ess)
        diag_rows.append([
            str(t),
            fmt_float(acc) if acc is not None else "",
            fmt_float(ess) if ess is not None else "",
        ])
        if annotate_dir is not None:
            write_pgm(_annotate(frame, est.poses), os.path.join(annotate_dir, FRAME_NAME % t))

    total_failures = sum(m.failures for m in metrics)
    equivalent = (
        scale_failures(total_failures, n_frames, cfg.reference_frames)
        if cfg.reference_frames is not None
        else None
    )
    all_d = np.concatenate([m.distances for m in metrics])
    report = RunReport(
        tracker=cfg.tracker,
        n_frames=n_frames,
        n_targets=n_targets,
        total_failures=total_failures,
        equivalent_failures=equivalent,
        mean_distance=float(all_d.mean()),
        max_distance=float(all_d.max()),
        acceptance_rate_mean=float(np.mean(acc_rates)) if acc_rates else None,
        mean_ess=float(np.mean(ess_means)) if ess_means else None,
        metrics=metrics,
        config_echo=_config_echo(cfg),
        wall_clock_s=time.perf_counter() - t0,
        output_dir=cfg.output_dir,
    )

    _write_metrics_csv(os.path.join(cfg.output_dir, "metrics.csv"), metrics)
    write_rows(os.path.join(cfg.output_dir, "estimates.csv"), ESTIMATES_HEADER, est_rows)
    write_rows(os.path.join(cfg.output_dir, "diagnostics.csv"), DIAGNOSTICS_HEADER, diag_rows)
    _write_summary_csv(os.path.join(cfg.output_dir, "summary.csv"), report)
    if cfg.scenario is not None:
        GroundTruthTrack(np.stack(truth_poses_log)).write_csv(
            os.path.join(cfg.output_dir, "groundtruth.csv")
        )
    _write_report_text(os.path.join(cfg.output_dir, "report.txt"), report)
    from .report import render_run_figure

    render_run_figure(report, os.path.join(cfg.output_dir, "distance_failures.png"))
    return report


def _append_estimate_rows(rows, t, est: TrackEstimate) -> None:
    for k in range(est.poses.shape[0]):
        rows.append([str(t), str(k)] + [fmt_float(v) for v in est.poses[k]])


def _write_metrics_csv(path, metrics) -> None:
    rows = []
    for m in metrics:
        failed = set(m.failed_ids)
        for k in range(m.distances.shape[0]):
            rows.append([str(m.frame), str(k), fmt_float(m.distances[k]), str(int(k in failed))])
    write_rows(path, METRICS_HEADER, rows)


def _write_summary_csv(path, report: RunReport) -> None:
    row = [
        report.tracker,
        str(report.n_frames),
        str(report.n_targets),
        str(report.total_failures),
        "" if report.equivalent_failures is None else str(report.equivalent_failures),
        fmt_float(report.mean_distance),
        fmt_float(report.max_distance),
        "" if report.acceptance_rate_mean is None else fmt_float(report.acceptance_rate_mean),
    ]
    write_rows(path, SUMMARY_HEADER, [row])


def _write_report_text(path, report: RunReport) -> None:
    lines = [
        f"tracker: {report.tracker}",
        f"frames: {report.n_frames}",
        f"targets: {report.n_targets}",
        f"failures: {report.total_failures}",
        f"equivalent_failures: {report.equivalent_failures}",
        f"mean_dist_px: {report.mean_distance:.4f}",
        f"max_dist_px: {report.max_distance:.4f}",
        f"acceptance_rate_mean: {report.acceptance_rate_mean}",
        f"mean_ess: {report.mean_ess}",
        f"wall_clock_s: {report.wall_clock_s:.2f}",
        "config:",
        json.dumps(report.config_echo, indent=2, sort_keys=True),
        "",
    ]
    with open(path, "w", newline="\n") as fh:
        fh.write("\n".join(lines))


COMPARE_CELLS_HEADER = ["label", "tracker", "count", "seed", "failures", "equivalent_failures", "mean_dist_px"]
COMPARE_SUMMARY_HEADER = [
    "label",
    "tracker",
    "count",
    "seeds",
    "mean_failures",
    "mean_equivalent_failures",
    "mean_dist_px",
]


@dataclass
class CompareReport:
    cells: list
    summary: list
    n_targets: int
    output_dir: str
    wall_clock_s: float


def compare_experiments(plan: dict) -> CompareReport:
    """Run every tracker cell over every seed, sharing each seed's rendered
    sequence across cells, and write the aggregate comparison outputs."""
    t0 = time.perf_counter()
    scenario: ScenarioConfig = plan["scenario"]
    seeds: list[int] = plan["seeds"]
    cells: list[dict] = plan["cells"]
    threshold: float = plan["failure_threshold_px"]
    reference = plan["reference_frames"]
    motion: MotionParams = plan["motion"]
    interaction: InteractionParams = plan["interaction"]
    out_dir: str = plan["output_dir"]

    cell_rows = []
    per_cell = {c["label"]: [] for c in cells}
    for seed in seeds:
        scen = replace(scenario, rng_seed=seed)
        stream = _iter_scenario_frames(scen)
        _, init_poses, first_frame = next(stream)
        init_poses = np.array(init_poses, dtype=np.float64)
        model = learn_scenario_template(first_frame, init_poses, scen.dims)

        trackers = []
        for idx, cell in enumerate(cells):
            rng = np.random.default_rng(np.random.SeedSequence(entropy=(seed, idx)))
            if cell["tracker"] == "mcmc-mrf":
                trk = McmcMrfTracker(init_poses, model, motion, interaction,
                                     cell["count"], cell["burn_in"], rng)
            else:
                trk = IndependentTracker(init_poses, model, motion, cell["count"], rng)
            trackers.append(trk)

        fail_counts = [0] * len(cells)
        dist_sums = [0.0] * len(cells)
        n_scored = 0
        for t, truth_poses, frame in stream:
            truth_poses = np.array(truth_poses, dtype=np.float64)
            n_scored += 1
            for idx, trk in enumerate(trackers):
                est = trk.step(frame)
                d = np.hypot(est.x - truth_poses[:, 0], est.y - truth_poses[:, 1])
                failed, _ = detect_and_correct(est, truth_poses, threshold, trk)
                fail_counts[idx] += len(failed)
                dist_sums[idx] += float(d.mean())

        for idx, cell in enumerate(cells):
            label = cell["label"]
            eq = scale_failures(fail_counts[idx], scen.n_frames, reference) if reference else None
            mean_d = dist_sums[idx] / max(n_scored, 1)
            per_cell[label].append((seed, fail_counts[idx], eq, mean_d))
            cell_rows.append([
                label,
                cell["tracker"],
                str(cell["count"]),
                str(seed),
                str(fail_counts[idx]),
                "" if eq is None else str(eq),
                fmt_float(mean_d),
            ])

    summary = []
    for cell in cells:
        label = cell["label"]
        rows = per_cell[label]
        mean_failures = float(np.mean([r[1] for r in rows]))
        eqs = [r[2] for r in rows if r[2] is not None]
        mean_eq = float(np.mean(eqs)) if eqs else None
        mean_dist = float(np.mean([r[3] for r in rows]))
        summary.append({
            "label": label,
            "tracker": cell["tracker"],
            "count": cell["count"],
            "seeds": len(rows),
            "mean_failures": mean_failures,
            "mean_equivalent_failures": mean_eq,
            "mean_dist_px": mean_dist,
        })

    os.makedirs(out_dir, exist_ok=True)
    write_rows(os.path.join(out_dir, "compare_cells.csv"), COMPARE_CELLS_HEADER, cell_rows)
    write_rows(
        os.path.join(out_dir, "compare_summary.csv"),
        COMPARE_SUMMARY_HEADER,
        (
            [
                s["label"],
                s["tracker"],
                str(s["count"]),
                str(s["seeds"]),
                fmt_float(s["mean_failures"]),
                "" if s["mean_equivalent_failures"] is None else fmt_float(s["mean_equivalent_failures"]),
                fmt_float(s["mean_dist_px"]),
            ]
            for s in summary
        ),
    )
    report = CompareReport(
        cells=cell_rows,
        summary=summary,
        n_targets=scenario.n_agents,
        output_dir=out_dir,
        wall_clock_s=time.perf_counter() - t0,
    )
    lines = [f"seeds: {len(seeds)}", f"wall_clock_s: {report.wall_clock_s:.2f}", "cells:"]
    for s in summary:
        lines.append(
            f"  {s['label']}: mean_failures={s['mean_failures']:.2f} mean_dist_px={s['mean_dist_px']:.3f}"
        )
    lines.append("")
    with open(os.path.join(out_dir, "report.txt"), "w", newline="\n") as fh:
        fh.write("\n".join(lines))
    from .report import render_compare_figure

    render_compare_figure(report, os.path.join(out_dir, "compare.png"))
    return report


def read_estimates_csv(path: str | os.PathLike) -> np.ndarray:
    """Estimates file back as (n_frames, n_targets, 3); must be complete."""
    try:
        header, rows = read_rows(path)
    except OSError as e:
        raise InputError(f"cannot read estimates {path}: {e}") from e
    expect_header(header, ESTIMATES_HEADER, path)
    if not rows:
        raise InputError(f"{path}: no estimate rows")
    frames = sorted({int(r[0]) for r in rows})
    targets = sorted({int(r[1]) for r in rows})
    n_frames, n = len(frames), len(targets)
    if frames != list(range(1, n_frames + 1)) or targets != list(range(n)):
        raise InputError(f"{path}: frames must be 1..T and targets 0..n-1 with no gaps")
    poses = np.full((n_frames, n, 3), np.nan)
    for r in rows:
        poses[int(r[0]) - 1, int(r[1])] = (float(r[2]), float(r[3]), float(r[4]))
    if np.any(np.isnan(poses)):
        raise InputError(f"{path}: missing frame x target combinations")
    return poses


def evaluate_estimates(plan: dict) -> RunReport:
    """Re-score stored estimates against groundtruth; no tracker state, so
    the stored estimates must already reflect any corrections."""
    t0 = time.perf_counter()
    est = read_estimates_csv(plan["estimates"])
    try:
        truth = GroundTruthTrack.read_csv(plan["groundtruth"])
    except (OSError, ValueError) as e:
        raise InputError(f"cannot read groundtruth {plan['groundtruth']}: {e}") from e
    if truth.poses.shape != est.shape:
        raise InputError(
            f"estimates {plan['estimates']} shape {est.shape[:2]} does not match "
            f"groundtruth {plan['groundtruth']} shape {truth.poses.shape[:2]}"
        )
    threshold = plan["failure_threshold_px"]
    metrics = []
    for t in range(est.shape[0]):
        d = np.hypot(
            est[t, :, 0] - truth.poses[t, :, 0], est[t, :, 1] - truth.poses[t, :, 1]
        )
        failed = tuple(int(i) for i in np.nonzero(d > threshold)[0])
        metrics.append(FrameMetrics(t + 1, d, failed))
    total = sum(m.failures for m in metrics)
    reference = plan["reference_frames"]
    all_d = np.concatenate([m.distances for m in metrics])
    report = RunReport(
        tracker="eval",
        n_frames=est.shape[0],
        n_targets=est.shape[1],
        total_failures=total,
        equivalent_failures=scale_failures(total, est.shape[0], reference) if reference else None,
        mean_distance=float(all_d.mean()),
        max_distance=float(all_d.max()),
        acceptance_rate_mean=None,
        mean_ess=None,
        metrics=metrics,
        config_echo={k: plan[k] for k in sorted(plan)},
        wall_clock_s=time.perf_counter() - t0,
        output_dir=plan["output_dir"] or "",
    )
    if plan["output_dir"]:
        os.makedirs(plan["output_dir"], exist_ok=True)
        _write_metrics_csv(os.path.join(plan["output_dir"], "metrics.csv"), metrics)
        _write_summary_csv(os.path.join(plan["output_dir"], "summary.csv"), report)
        _write_report_text(os.path.join(plan["output_dir"], "report.txt"), report)
    return report


def simulate_to_dir(scenario: ScenarioConfig, output_dir: str | os.PathLike) -> GroundTruthTrack:
    """Write frame_000001.pgm ... and groundtruth.csv for a scenario."""
    os.makedirs(output_dir, exist_ok=True)
    poses = []
    for t, world, frame in simulate_sequence(scenario):
        write_pgm(frame, os.path.join(output_dir, FRAME_NAME % t))
        poses.append(world.poses)
    track = GroundTruthTrack(np.stack(poses))
    track.write_csv(os.path.join(output_dir, "groundtruth.csv"))
    return track
