"""Template appearance model and the two-sided patch likelihood.

A template is two scalar intensity statistics, one for target bodies and one
for background. The log-likelihood of a pose rewards patches near the
foreground mean and penalizes patches near the background mean:

    loglik = -||patch - mu_F|| / (2 sigma_F) + ||patch - mu_B|| / (2 sigma_B)

with the Euclidean norm over the patch vector. Higher means more target-like.
"""

from __future__ import annotations

import math
import os
from dataclasses import dataclass

import numpy as np

from .geometry import Frame, PatchDims, _sample_batch, interior_reach, sample_patch, sample_patch_interior

SIGMA_FLOOR = 1e-3


class TemplateError(ValueError):
    """Raised for degenerate or inconsistent template inputs."""


@dataclass(frozen=True)
class TemplateModel:
    mu_f: float
    sigma_f: float
    mu_b: float
    sigma_b: float
    dims: PatchDims = PatchDims()

    def __post_init__(self):
        if not (self.sigma_f > 0.0 and self.sigma_b > 0.0):
            raise TemplateError(f"template std-devs must be positive, got {self}")
        if self.mu_f == self.mu_b:
            raise TemplateError("degenerate template: foreground and background means are equal")
        self.dims.validate()


def learn_template(patches, dims: PatchDims) -> tuple[float, float]:
    """Scalar (mean, std) statistics from a stack of training patches.

    The mean is the pixel mean of the per-pixel mean image, which equals the
    grand mean over every training pixel. The std is the RMS deviation of all
    training pixels from that mean, floored at 1e-3.
    """
    dims.validate()
    vecs = [np.asarray(p, dtype=np.float64).ravel() for p in patches]
    if len(vecs) < 2:
        raise TemplateError(f"need at least 2 patches, got {len(vecs)}")
    bad = [v.size for v in vecs if v.size != dims.area]
    if bad:
        raise TemplateError(f"patch length {bad[0]} does not match dims {dims} (area {dims.area})")
    arr = np.stack(vecs)
    mean_image = arr.mean(axis=0)
    mu = float(mean_image.mean())
    sigma = float(np.sqrt(np.mean((arr - mu) ** 2)))
    return mu, max(sigma, SIGMA_FLOOR)


def patch_log_likelihood(patch: np.ndarray, model: TemplateModel) -> float:
    """Two-sided likelihood of an already-sampled patch vector."""
    p = np.asarray(patch, dtype=np.float64)
    df = p - model.mu_f
    db = p - model.mu_b
    nf = math.sqrt(float(df @ df))
    nb = math.sqrt(float(db @ db))
    return -0.5 * nf / model.sigma_f + 0.5 * nb / model.sigma_b


def log_likelihood(frame: Frame, state, model: TemplateModel, oob_fill: float | None = None) -> float:
    """Likelihood of one target pose; out-of-frame samples read as background."""
    fill = model.mu_b if oob_fill is None else oob_fill
    return patch_log_likelihood(sample_patch(frame, state, model.dims, fill), model)


def pose_log_likelihood(frame: Frame, x: float, y: float, th: float, model: TemplateModel) -> float:
    """Scalar likelihood for the samplers' inner loop.

    Agrees with log_likelihood at the same pose up to norm-accumulation
    round-off, far below any acceptance-decision scale. The norms come from
    the patch's sum and sum of squares, so the patch is traversed once.
    """
    dims = model.dims
    reach = interior_reach(dims)
    if reach <= x <= frame.width - 1 - reach and reach <= y <= frame.height - 1 - reach:
        p = sample_patch_interior(frame, x, y, th, dims)
    else:
        p = sample_patch(frame, (x, y, th), dims, model.mu_b)
    s1 = float(p.sum(dtype=np.float64))
    s2 = float(p.dot(p))
    area = dims.area
    nf = math.sqrt(max(s2 - 2.0 * model.mu_f * s1 + area * model.mu_f * model.mu_f, 0.0))
    nb = math.sqrt(max(s2 - 2.0 * model.mu_b * s1 + area * model.mu_b * model.mu_b, 0.0))
    return -0.5 * nf / model.sigma_f + 0.5 * nb / model.sigma_b


def log_likelihood_batch(frame: Frame, states, model: TemplateModel, oob_fill: float | None = None) -> np.ndarray:
    """Vectorized log_likelihood over a (k, 3) pose array."""
    fill = model.mu_b if oob_fill is None else oob_fill
    patches = _sample_batch(frame, states, model.dims, fill)
    s1 = patches.sum(axis=1, dtype=np.float64)
    s2 = np.einsum("ij,ij->i", patches, patches, dtype=np.float64)
    area = model.dims.area
    nf = np.sqrt(np.maximum(s2 - 2.0 * model.mu_f * s1 + area * model.mu_f**2, 0.0))
    nb = np.sqrt(np.maximum(s2 - 2.0 * model.mu_b * s1 + area * model.mu_b**2, 0.0))
    return -0.5 * nf / model.sigma_f + 0.5 * nb / model.sigma_b


def joint_log_likelihood(frame: Frame, particle, model: TemplateModel) -> float:
    """Sum of per-target likelihoods over a joint particle."""
    return float(sum(log_likelihood(frame, s, model) for s in particle.targets))


def load_patches_dir(path: str | os.PathLike, dims: PatchDims) -> list[np.ndarray]:
    """Load training patches from a directory of PGM files.

    Each file must be dims.length wide by dims.width tall; pixels are
    flattened u-major to match sample_patch ordering.
    """
    from .pgm import read_pgm

    names = sorted(n for n in os.listdir(path) if n.lower().endswith(".pgm"))
    if not names:
        raise TemplateError(f"no .pgm patches found in {path}")
    patches = []
    for name in names:
        frame = read_pgm(os.path.join(path, name))
        if frame.width != dims.length or frame.height != dims.width:
            raise TemplateError(
                f"{name}: expected {dims.length}x{dims.width} patch, got {frame.width}x{frame.height}"
            )
        patches.append(frame.pixels.T.astype(np.float64).ravel())
    return patches
