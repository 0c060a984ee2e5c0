"""Exact dynamic mode decomposition of per-beam intensity matrices.

The azimuth x time intensity matrix of a beam is modeled as a linear
frame-advance system.  Modes whose eigenvalue sits at 1 do not evolve in
time and together form the static intensity background; everything else is
transient foreground.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .errors import DegenerateMatrix, NoStaticMode, NumericalFailure, ShapeMismatch, TooFewFrames
from .frames import INTENSITY, build_st_matrices

SINGULAR_FLOOR = 1e-12  # relative to the largest singular value


@dataclass
class DMDConfig:
    svd_energy: float = 0.9999
    eigen_tol: float = 0.01
    intensity_threshold: float = 10.0

    def __post_init__(self):
        if not 0.0 < self.svd_energy <= 1.0:
            raise ValueError("svd_energy must be in (0, 1]")
        if self.eigen_tol <= 0.0:
            raise ValueError("eigen_tol must be positive")
        if self.intensity_threshold < 0.0:
            raise ValueError("intensity_threshold must be non-negative")


@dataclass
class DMDModel:
    """Fitted decomposition for one beam.

    background_vector is the real part of the static-mode reconstruction,
    or the per-bin temporal median when no static mode exists.
    """

    beam: int
    modes: np.ndarray
    eigenvalues: np.ndarray
    amplitudes: np.ndarray
    rank: int
    background_indices: tuple[int, ...] = ()
    background_vector: np.ndarray = field(default_factory=lambda: np.zeros(0))
    median_fallback: bool = False


def shift_split(data: np.ndarray):
    """Split an azimuth x m matrix into the one-frame-shifted pair."""
    if data.ndim != 2 or data.shape[1] < 2:
        raise TooFewFrames("need at least two frame columns")
    return data[:, :-1], data[:, 1:]


def fit_reduced_operator(left: np.ndarray, right: np.ndarray, svd_energy: float = 0.9999):
    """Truncated SVD of the left matrix and the rank-reduced advance operator.

    Rank is the smallest r whose cumulative squared-singular-value energy
    reaches svd_energy; singular values below SINGULAR_FLOOR * sigma_1 are
    always dropped.
    """
    if left.shape != right.shape:
        raise ShapeMismatch("shifted matrices must share a shape")
    if not np.any(left):
        raise DegenerateMatrix("left matrix is all zero")

    u, s, vh = np.linalg.svd(left, full_matrices=False)
    s = s[s > SINGULAR_FLOOR * s[0]]
    energy = np.cumsum(s**2) / np.sum(s**2)
    r = int(np.searchsorted(energy, svd_energy - 1e-15)) + 1
    r = min(r, s.size)

    u_r = u[:, :r]
    s_r = s[:r]
    v_r = vh[:r].conj().T
    atilde = u_r.conj().T @ right @ (v_r / s_r)
    return u_r, s_r, v_r, atilde


def eig_modes(atilde: np.ndarray, right: np.ndarray, v_r: np.ndarray, s_r: np.ndarray):
    """Eigendecompose the reduced operator and lift to exact-DMD modes."""
    try:
        lam, w = np.linalg.eig(atilde)
    except np.linalg.LinAlgError as exc:
        raise NumericalFailure(f"eigendecomposition failed: {exc}") from exc
    phi = right @ (v_r / s_r) @ w
    return phi, lam


def amplitudes(phi: np.ndarray, first_column: np.ndarray) -> np.ndarray:
    """Least-squares mode amplitudes fitted to the first frame."""
    b, *_ = np.linalg.lstsq(phi, first_column.astype(complex), rcond=None)
    return b


def background_vector(phi: np.ndarray, lam: np.ndarray, b: np.ndarray, eigen_tol: float):
    """Real static-background vector from modes with eigenvalue near 1."""
    indices = np.flatnonzero(np.abs(lam - 1.0) <= eigen_tol)
    if indices.size == 0:
        raise NoStaticMode("no eigenvalue within tolerance of 1")
    vec = (phi[:, indices] @ b[indices]).real
    return vec, tuple(int(i) for i in indices)


def reconstruct(model: DMDModel, t: int, mode_set=None) -> np.ndarray:
    """Evaluate sum_j b_j phi_j lambda_j^(t-1) over the given modes (1-based t)."""
    if mode_set is None:
        mode_set = range(len(model.eigenvalues))
    idx = np.fromiter(mode_set, dtype=int)
    if idx.size == 0:
        return np.zeros(model.modes.shape[0], dtype=complex)
    scale = model.amplitudes[idx] * model.eigenvalues[idx] ** (t - 1)
    return model.modes[:, idx] @ scale


def train_intensity_model(frames, beam: int, cfg: DMDConfig | None = None) -> DMDModel:
    """Fit the intensity background of one beam from ordered frames.

    Falls back to the per-bin temporal median when the data is degenerate or
    carries no static mode.
    """
    cfg = cfg or DMDConfig()
    st = build_st_matrices(frames, beam, INTENSITY)
    data = st.data
    left, right = shift_split(data)

    try:
        _, s_r, v_r, atilde = fit_reduced_operator(left, right, cfg.svd_energy)
        phi, lam = eig_modes(atilde, right, v_r, s_r)
        b = amplitudes(phi, left[:, 0])
        vec, indices = background_vector(phi, lam, b, cfg.eigen_tol)
        return DMDModel(beam=beam, modes=phi, eigenvalues=lam, amplitudes=b,
                        rank=len(lam), background_indices=indices,
                        background_vector=vec)
    except (DegenerateMatrix, NoStaticMode):
        n = data.shape[0]
        return DMDModel(beam=beam,
                        modes=np.zeros((n, 0), dtype=complex),
                        eigenvalues=np.zeros(0, dtype=complex),
                        amplitudes=np.zeros(0, dtype=complex),
                        rank=0,
                        background_indices=(),
                        background_vector=np.median(data, axis=1),
                        median_fallback=True)


def intensity_foreground_mask(intensities: np.ndarray, ranges: np.ndarray,
                              background: np.ndarray, tau: float) -> np.ndarray:
    """Cells whose intensity deviates from the background by more than tau.

    Non-return cells are never foreground.
    """
    intensities = np.asarray(intensities)
    if intensities.shape != np.shape(background) or intensities.shape != np.shape(ranges):
        raise ShapeMismatch("mask inputs must share a shape")
    return (np.abs(intensities - background) > tau) & (np.asarray(ranges) > 0.0)
