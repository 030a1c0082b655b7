"""Multi-target tracking with a joint MCMC filter over an interaction MRF.

The package tracks n oriented rectangular targets in grayscale frames. A
joint Metropolis-Hastings filter shares one sample set across all targets
and penalizes hypotheses where neighbors overlap; independent per-target
particle filters serve as the baseline. A bounded-arena simulator with
stop-and-reverse agents provides sequences with exact groundtruth, and the
harness scores both trackers with a snap-to-truth failure protocol.
"""

from .appearance import (
    TemplateError,
    TemplateModel,
    learn_template,
    load_patches_dir,
    log_likelihood,
    log_likelihood_batch,
    patch_log_likelihood,
)
from .config import ConfigError, RunConfig
from .geometry import (
    Frame,
    JointParticle,
    PatchDims,
    TargetState,
    normalize_angle,
    rect_overlap_count,
    sample_patch,
    sample_patches,
)
from .harness import (
    CompareReport,
    FrameMetrics,
    InputError,
    IndependentTracker,
    McmcMrfTracker,
    RunReport,
    compare_experiments,
    detect_and_correct,
    evaluate_estimates,
    mean_distance_series,
    run_experiment,
    scale_failures,
    simulate_to_dir,
)
from .interaction import (
    InteractionParams,
    MRFGraph,
    build_mrf,
    local_log_interaction,
    log_potential,
)
from .motion import (
    MotionParams,
    displacement,
    log_transition_density,
    propagate_array,
    propagate_joint,
    propagate_target,
)
from .pgm import PgmError, read_pgm, write_pgm
from .samplers import (
    CondensationConfig,
    McmcConfig,
    SampleSet,
    TrackEstimate,
    WeightedParticleSet,
    condensation_step,
    log_acceptance,
    mcmc_mrf_step,
    resample_systematic,
)
from .simulate import (
    GroundTruthTrack,
    ScenarioConfig,
    WorldState,
    init_world,
    make_crossing_scenario,
    render,
    simulate_sequence,
    step_world,
)

__version__ = "0.1.0"

__all__ = [
    "CompareReport",
    "CondensationConfig",
    "ConfigError",
    "Frame",
    "FrameMetrics",
    "GroundTruthTrack",
    "IndependentTracker",
    "InputError",
    "InteractionParams",
    "JointParticle",
    "MRFGraph",
    "McmcConfig",
    "McmcMrfTracker",
    "MotionParams",
    "PatchDims",
    "PgmError",
    "RunConfig",
    "RunReport",
    "SampleSet",
    "ScenarioConfig",
    "TargetState",
    "TemplateError",
    "TemplateModel",
    "TrackEstimate",
    "WeightedParticleSet",
    "WorldState",
    "build_mrf",
    "compare_experiments",
    "condensation_step",
    "detect_and_correct",
    "displacement",
    "evaluate_estimates",
    "init_world",
    "learn_template",
    "load_patches_dir",
    "local_log_interaction",
    "log_acceptance",
    "log_likelihood",
    "log_likelihood_batch",
    "log_potential",
    "log_transition_density",
    "make_crossing_scenario",
    "mcmc_mrf_step",
    "mean_distance_series",
    "normalize_angle",
    "patch_log_likelihood",
    "propagate_array",
    "propagate_joint",
    "propagate_target",
    "read_pgm",
    "rect_overlap_count",
    "render",
    "resample_systematic",
    "run_experiment",
    "sample_patch",
    "sample_patches",
    "scale_failures",
    "simulate_sequence",
    "simulate_to_dir",
    "step_world",
    "write_pgm",
]
