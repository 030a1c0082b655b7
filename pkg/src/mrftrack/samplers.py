"""The two trackers: a joint MCMC filter and independent resampling filters.

The joint filter carries an unweighted set of joint samples between frames.
Each frame runs one Metropolis-Hastings chain: initialize by propagating a
randomly chosen previous sample through the motion model, then repeatedly
pick a random previous sample and a random target, propose a motion step for
that one target, and accept on the likelihood + interaction ratio alone.
The transition mixture never has to be evaluated because proposals are drawn
from it one target at a time, so those terms cancel in the ratio.

The baseline runs one weighted particle filter per target with systematic
resampling and no coupling between targets.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .appearance import TemplateModel, log_likelihood_batch
from .geometry import Frame, JointParticle, TargetState
from .interaction import InteractionParams, MRFGraph, local_log_interaction_at
from .motion import MotionParams, propagate_array

_PI = math.pi
_TWO_PI = 2.0 * math.pi

# Candidate likelihoods are evaluated in bounded slices so long chains never
# materialize a (total, patch_area) array at once.
_LL_CHUNK = 4096


@dataclass(frozen=True)
class McmcConfig:
    n_samples: int
    burn_in: int = 0
    motion: MotionParams = field(default_factory=MotionParams)
    interaction: InteractionParams = field(default_factory=InteractionParams)
    rng_seed: int | None = None

    def __post_init__(self):
        if self.n_samples < 1:
            raise ValueError(f"n_samples must be >= 1, got {self.n_samples}")
        if self.burn_in < 0:
            raise ValueError(f"burn_in must be >= 0, got {self.burn_in}")
        self.motion.validate()


@dataclass(frozen=True)
class CondensationConfig:
    m_particles: int
    motion: MotionParams = field(default_factory=MotionParams)
    rng_seed: int | None = None

    def __post_init__(self):
        if self.m_particles < 1:
            raise ValueError(f"m_particles must be >= 1, got {self.m_particles}")
        self.motion.validate()


class SampleSet:
    """Unweighted joint samples for one timestep, shape (N, n_targets, 3).

    acceptance_rate records how the set was generated (None for hand-built
    or initial sets).
    """

    __slots__ = ("samples", "acceptance_rate")

    def __init__(self, samples, acceptance_rate: float | None = None):
        arr = np.array(samples, dtype=np.float64)
        if arr.ndim != 3 or arr.shape[2] != 3:
            raise ValueError(f"expected (N, n, 3) sample array, got shape {arr.shape}")
        if arr.shape[0] < 1 or arr.shape[1] < 1:
            raise ValueError(f"sample set needs N >= 1 and n >= 1, got shape {arr.shape}")
        if not np.all(np.isfinite(arr)):
            raise ValueError("sample set contains non-finite poses")
        arr[:, :, 2] = (arr[:, :, 2] + _PI) % _TWO_PI - _PI
        arr.setflags(write=False)
        self.samples = arr
        self.acceptance_rate = acceptance_rate

    @classmethod
    def replicate(cls, poses, count: int) -> "SampleSet":
        """Set of `count` identical joint samples (tracker initialization)."""
        arr = np.asarray(poses, dtype=np.float64)
        if arr.ndim != 2 or arr.shape[1] != 3:
            raise ValueError(f"expected (n, 3) pose array, got shape {arr.shape}")
        return cls(np.broadcast_to(arr, (count,) + arr.shape))

    @classmethod
    def from_particles(cls, particles) -> "SampleSet":
        return cls(np.stack([p.to_array() for p in particles]))

    @property
    def n_targets(self) -> int:
        return self.samples.shape[1]

    def __len__(self) -> int:
        return self.samples.shape[0]

    def particle(self, s: int) -> JointParticle:
        return JointParticle.from_array(self.samples[s])


class WeightedParticleSet:
    """Per-target weighted particles: samples (n, M, 3), weights (n, M).

    Each target's weight row sums to 1. uniform_fallback marks targets whose
    weights had to be reset to uniform because every likelihood underflowed.
    """

    __slots__ = ("samples", "weights", "ess", "uniform_fallback")

    def __init__(self, samples, weights, uniform_fallback=None):
        arr = np.array(samples, dtype=np.float64)
        w = np.array(weights, dtype=np.float64)
        if arr.ndim != 3 or arr.shape[2] != 3:
            raise ValueError(f"expected (n, M, 3) sample array, got shape {arr.shape}")
        if w.shape != arr.shape[:2]:
            raise ValueError(f"weight shape {w.shape} does not match samples {arr.shape[:2]}")
        if arr.shape[0] < 1 or arr.shape[1] < 1:
            raise ValueError(f"particle set needs n >= 1 and M >= 1, got shape {arr.shape}")
        if not np.all(np.isfinite(arr)):
            raise ValueError("particle set contains non-finite poses")
        if np.any(w < 0.0) or not np.all(np.isfinite(w)):
            raise ValueError("weights must be finite and non-negative")
        sums = w.sum(axis=1)
        if np.any(np.abs(sums - 1.0) > 1e-9):
            raise ValueError("each target's weights must sum to 1 within 1e-9")
        arr[:, :, 2] = (arr[:, :, 2] + _PI) % _TWO_PI - _PI
        arr.setflags(write=False)
        w.setflags(write=False)
        self.samples = arr
        self.weights = w
        self.ess = 1.0 / np.einsum("ij,ij->i", w, w)
        if uniform_fallback is None:
            uniform_fallback = np.zeros(arr.shape[0], dtype=bool)
        self.uniform_fallback = np.asarray(uniform_fallback, dtype=bool)

    @classmethod
    def replicate(cls, poses, m_particles: int) -> "WeightedParticleSet":
        """M copies of each target's pose with uniform weights."""
        arr = np.asarray(poses, dtype=np.float64)
        if arr.ndim != 2 or arr.shape[1] != 3:
            raise ValueError(f"expected (n, 3) pose array, got shape {arr.shape}")
        n = arr.shape[0]
        samples = np.broadcast_to(arr[:, None, :], (n, m_particles, 3))
        weights = np.full((n, m_particles), 1.0 / m_particles)
        return cls(samples, weights)

    @property
    def n_targets(self) -> int:
        return self.samples.shape[0]

    @property
    def m_particles(self) -> int:
        return self.samples.shape[1]


class TrackEstimate:
    """Per-target pose estimate, shape (n, 3) with normalized headings."""

    __slots__ = ("poses",)

    def __init__(self, poses):
        arr = np.array(poses, dtype=np.float64)
        if arr.ndim != 2 or arr.shape[1] != 3:
            raise ValueError(f"expected (n, 3) estimate array, got shape {arr.shape}")
        if not np.all(np.isfinite(arr)):
            raise ValueError("estimate contains non-finite values")
        arr[:, 2] = (arr[:, 2] + _PI) % _TWO_PI - _PI
        arr.setflags(write=False)
        self.poses = arr

    @property
    def x(self) -> np.ndarray:
        return self.poses[:, 0]

    @property
    def y(self) -> np.ndarray:
        return self.poses[:, 1]

    @property
    def theta(self) -> np.ndarray:
        return self.poses[:, 2]

    def target(self, i: int) -> TargetState:
        return TargetState(*self.poses[i])

    @classmethod
    def from_samples(cls, samples) -> "TrackEstimate":
        """Unweighted mean over (N, n, 3) joint samples; circular mean heading."""
        arr = np.asarray(samples, dtype=np.float64)
        out = np.empty((arr.shape[1], 3))
        out[:, 0] = arr[:, :, 0].mean(axis=0)
        out[:, 1] = arr[:, :, 1].mean(axis=0)
        out[:, 2] = np.arctan2(
            np.sin(arr[:, :, 2]).mean(axis=0), np.cos(arr[:, :, 2]).mean(axis=0)
        )
        return cls(out)

    @classmethod
    def from_weighted(cls, samples, weights) -> "TrackEstimate":
        """Weighted mean over per-target particles (n, M, 3) with weights (n, M)."""
        arr = np.asarray(samples, dtype=np.float64)
        w = np.asarray(weights, dtype=np.float64)
        out = np.empty((arr.shape[0], 3))
        out[:, 0] = np.einsum("nm,nm->n", w, arr[:, :, 0])
        out[:, 1] = np.einsum("nm,nm->n", w, arr[:, :, 1])
        out[:, 2] = np.arctan2(
            np.einsum("nm,nm->n", w, np.sin(arr[:, :, 2])),
            np.einsum("nm,nm->n", w, np.cos(arr[:, :, 2])),
        )
        return cls(out)


def log_acceptance(loglik_new: float, loglik_old: float, logint_new: float, logint_old: float) -> float:
    """Metropolis-Hastings acceptance probability from log-domain terms."""
    for v in (loglik_new, loglik_old, logint_new, logint_old):
        if not math.isfinite(v):
            raise ValueError(f"log_acceptance requires finite inputs, got {v}")
    delta = (loglik_new + logint_new) - (loglik_old + logint_old)
    if delta >= 0.0:
        return 1.0
    return math.exp(delta)


def mcmc_mrf_step(
    prev: SampleSet,
    frame: Frame,
    model: TemplateModel,
    graph: MRFGraph,
    cfg: McmcConfig,
    rng: np.random.Generator,
    proposal=None,
) -> tuple[SampleSet, TrackEstimate]:
    """Advance the joint sample set by one frame with an MH chain.

    proposal, when given, replaces the Gaussian motion step: it is called as
    proposal(prev_pose, rng) -> (x, y, theta) both at chain initialization
    (once per target) and for each single-target move. The default is
    exactly the tracker's motion model.
    """
    prev_arr = prev.samples
    n_prev, n = prev_arr.shape[0], prev_arr.shape[1]
    if graph.n != n:
        raise ValueError(f"graph has {graph.n} targets but samples have {n}")
    total = cfg.burn_in + cfg.n_samples

    r0 = int(rng.integers(n_prev))
    if proposal is None:
        cur = propagate_array(prev_arr[r0], cfg.motion, rng)
    else:
        cur = np.array([proposal(prev_arr[r0, i], rng) for i in range(n)], dtype=np.float64)
        if cur.shape != (n, 3):
            raise ValueError(f"proposal must return (x, y, theta), got shape {cur.shape[1:]}")
        cur[:, 2] = (cur[:, 2] + _PI) % _TWO_PI - _PI
    cur_ll = log_likelihood_batch(frame, cur, model).tolist()

    # Proposals depend only on the previous frame's samples and fresh noise,
    # never on the chain state, so every candidate pose and its likelihood
    # can be computed up front. Only the accept loop is sequential.
    tgt = rng.integers(0, n, size=total)
    src_row = rng.integers(0, n_prev, size=total)
    if proposal is None:
        noise = rng.standard_normal((total, 3))
    uniforms = rng.random(total).tolist()

    base = prev_arr[src_row, tgt]
    if proposal is None:
        th = base[:, 2] + noise[:, 2] * cfg.motion.sigma_theta
        th = (th + _PI) % _TWO_PI - _PI
        c = np.cos(th)
        s = np.sin(th)
        dx = noise[:, 0] * cfg.motion.sigma_x
        dy = noise[:, 1] * cfg.motion.sigma_y
        cands = np.empty((total, 3))
        cands[:, 0] = base[:, 0] + c * dx - s * dy
        cands[:, 1] = base[:, 1] + s * dx + c * dy
        cands[:, 2] = th
    else:
        cands = np.array([proposal(base[t], rng) for t in range(total)], dtype=np.float64)
        if cands.shape != (total, 3):
            raise ValueError(f"proposal must return (x, y, theta), got shape {cands.shape[1:]}")
        cands[:, 2] = (cands[:, 2] + _PI) % _TWO_PI - _PI

    cand_ll = np.empty(total)
    for k in range(0, total, _LL_CHUNK):
        stop = min(k + _LL_CHUNK, total)
        cand_ll[k:stop] = log_likelihood_batch(frame, cands[k:stop], model)
    cand_ll = cand_ll.tolist()

    out = np.empty((cfg.n_samples, n, 3))
    params = cfg.interaction
    adjacency = graph.adjacency
    burn_in = cfg.burn_in
    accepted = 0
    tgt_l = tgt.tolist()
    cand_l = cands.tolist()
    for t in range(total):
        i = tgt_l[t]
        cand = cand_l[t]
        neighbors = adjacency[i]
        if neighbors:
            old_int = local_log_interaction_at(cur[i], cur, neighbors, params)
            new_int = local_log_interaction_at(cand, cur, neighbors, params)
            delta = (cand_ll[t] + new_int) - (cur_ll[i] + old_int)
        else:
            delta = cand_ll[t] - cur_ll[i]

        if delta >= 0.0 or uniforms[t] < math.exp(delta):
            cur[i] = cand
            cur_ll[i] = cand_ll[t]
            accepted += 1
        if t >= burn_in:
            out[t - burn_in] = cur

    new_set = SampleSet(out, acceptance_rate=accepted / total)
    return new_set, TrackEstimate.from_samples(new_set.samples)


def resample_systematic(weights, m: int, rng: np.random.Generator) -> np.ndarray:
    """Systematic resampling: m indices from one uniform offset.

    Expected count of index k is m * w_k and realized counts never deviate
    by more than 1 from that.
    """
    w = np.asarray(weights, dtype=np.float64)
    if w.ndim != 1 or w.size < 1:
        raise ValueError(f"weights must be a non-empty 1-D array, got shape {w.shape}")
    if m < 1:
        raise ValueError(f"need at least one draw, got m={m}")
    if np.any(w < 0.0) or not np.all(np.isfinite(w)):
        raise ValueError("weights must be finite and non-negative")
    total = float(w.sum())
    if abs(total - 1.0) > 1e-9:
        raise ValueError(f"weights must sum to 1 within 1e-9, got {total!r}")
    positions = (float(rng.random()) + np.arange(m)) / m
    cum = np.cumsum(w / total)
    cum[-1] = 1.0
    return np.searchsorted(cum, positions, side="right").astype(np.intp)


def condensation_step(
    prev: WeightedParticleSet,
    frame: Frame,
    model: TemplateModel,
    cfg: CondensationConfig,
    rng: np.random.Generator,
) -> tuple[WeightedParticleSet, TrackEstimate]:
    """Advance every independent per-target filter by one frame.

    Per target: systematic resample, propagate through the motion model,
    reweight by the exponentiated log-likelihood with a max-log shift. A
    target whose weights all underflow to zero is reset to uniform and
    flagged. Targets consume the generator stream in index order.
    """
    n, m = prev.n_targets, prev.m_particles
    new_samples = np.empty((n, m, 3))
    for k in range(n):
        idx = resample_systematic(prev.weights[k], m, rng)
        new_samples[k] = propagate_array(prev.samples[k][idx], cfg.motion, rng)

    loglik = log_likelihood_batch(frame, new_samples.reshape(n * m, 3), model).reshape(n, m)
    shifted = np.exp(loglik - loglik.max(axis=1, keepdims=True))
    sums = shifted.sum(axis=1)
    fallback = ~np.isfinite(sums) | (sums <= 0.0)
    safe = np.where(fallback, 1.0, sums)
    weights = np.where(fallback[:, None], 1.0 / m, shifted / safe[:, None])

    new_set = WeightedParticleSet(new_samples, weights, uniform_fallback=fallback)
    return new_set, TrackEstimate.from_weighted(new_set.samples, new_set.weights)
