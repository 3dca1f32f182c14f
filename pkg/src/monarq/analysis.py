"""Classical reference results, single-factor calibration and the
shot/hardware noise model ``rmse**2 = A / N + B``."""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .errors import DegenerateCalibrationError


# ---------------------------------------------------------------------------
# classical oracles


def oracle_pointwise_product(f, g) -> np.ndarray:
    f = np.asarray(f, dtype=float)
    g = np.asarray(g, dtype=float)
    if f.shape != g.shape:
        raise ValueError(f"length mismatch: {f.shape} vs {g.shape}")
    return f * g


def oracle_dtft(h, omega):
    """``I = sum h[n] cos(w n)`` and ``Q = -sum h[n] sin(w n)``.

    ``omega`` may be a scalar or an array; the outputs follow its shape.
    """
    h = np.asarray(h, dtype=float)
    omega = np.asarray(omega, dtype=float)
    n = np.arange(h.size)
    phase = np.multiply.outer(omega, n)
    I = np.cos(phase) @ h
    Q = -(np.sin(phase) @ h)
    if omega.ndim == 0:
        return float(I), float(Q)
    return I, Q


def oracle_sqgrad(strip, left=None, right=None) -> np.ndarray:
    """``((I[i+1] - I[i-1]) / 2)**2`` with end pixels replicated by default."""
    strip = np.asarray(strip, dtype=float)
    lo = strip[0] if left is None else left
    hi = strip[-1] if right is None else right
    out = np.empty_like(strip)
    for i in range(strip.size):
        prev = strip[i - 1] if i > 0 else lo
        nxt = strip[i + 1] if i + 1 < strip.size else hi
        out[i] = ((nxt - prev) / 2.0) ** 2
    return out


def oracle_sqgrad_image(image, axis: int = 1) -> np.ndarray:
    """Delta-squared gradient of a 2-D image along ``axis`` (1 = columns)."""
    img = np.asarray(image, dtype=float)
    padded = np.pad(img, 1, mode="edge")
    if axis == 1:
        return ((padded[1:-1, 2:] - padded[1:-1, :-2]) / 2.0) ** 2
    if axis == 0:
        return ((padded[2:, 1:-1] - padded[:-2, 1:-1]) / 2.0) ** 2
    raise ValueError("axis must be 0 or 1")


def gradient_energy(image) -> np.ndarray:
    """``Dx**2 + Dy**2`` from raw central differences (D = 2 * Delta)."""
    return 4.0 * (oracle_sqgrad_image(image, 1) + oracle_sqgrad_image(image, 0))


def oracle_edge_ev(image, w: float) -> np.ndarray:
    """``(1 - w) * (Dx_sq + Dy_sq) / 2 - w`` in Delta-squared units."""
    mean_sq = (oracle_sqgrad_image(image, 1) + oracle_sqgrad_image(image, 0)) / 2.0
    return (1.0 - w) * mean_sq - w


def oracle_edge(image, threshold: float) -> np.ndarray:
    """Classical edge mask ``Dx**2 + Dy**2 > threshold``."""
    return gradient_energy(image) > threshold


# ---------------------------------------------------------------------------
# calibration and error summaries


def rmse(measured, truth) -> float:
    measured = np.asarray(measured, dtype=float)
    truth = np.asarray(truth, dtype=float)
    return float(np.sqrt(np.mean((measured - truth) ** 2)))


@dataclass
class CalibrationResult:
    scale: float
    rmse_before: float
    rmse_after: float
    n_points: int
    residuals: np.ndarray = field(repr=False)

    def histogram(self, bins: int = 20):
        """(counts, bin_edges) of the calibrated residuals."""
        return np.histogram(self.residuals, bins=bins)

    def to_dict(self) -> dict:
        return {"scale": self.scale, "rmse_before": self.rmse_before,
                "rmse_after": self.rmse_after, "n_points": self.n_points}


def calibrate_and_score(measured, truth, mask=None) -> CalibrationResult:
    """Least-squares scale through the origin, then RMSE after rescaling.

    ``mask`` restricts which points enter both the fit and the scores
    (e.g. ``truth > 0.1`` for gradients).
    """
    measured = np.asarray(measured, dtype=float).ravel()
    truth = np.asarray(truth, dtype=float).ravel()
    if measured.shape != truth.shape:
        raise ValueError(f"shape mismatch: {measured.shape} vs {truth.shape}")
    if mask is not None:
        keep = np.asarray(mask, dtype=bool).ravel()
        measured, truth = measured[keep], truth[keep]
    if measured.size < 2:
        raise ValueError("need at least 2 points to calibrate")
    denom = float(np.dot(measured, measured))
    if denom == 0.0:
        raise DegenerateCalibrationError("all measured values are zero")
    scale = float(np.dot(truth, measured)) / denom
    residuals = scale * measured - truth
    return CalibrationResult(
        scale=scale,
        rmse_before=rmse(measured, truth),
        rmse_after=float(np.sqrt(np.mean(residuals ** 2))),
        n_points=int(measured.size),
        residuals=residuals,
    )


# ---------------------------------------------------------------------------
# noise model


@dataclass
class NoiseFit:
    A: float
    B: float
    samples: list[tuple[int, float]]
    r_squared: float
    B_err: float

    @property
    def b_suspicious(self) -> bool:
        """B is negative by more than three standard errors."""
        return self.B < -3.0 * self.B_err

    def predict(self, shots) -> np.ndarray:
        return np.sqrt(np.clip(self.A / np.asarray(shots, dtype=float) + self.B, 0.0, None))

    def to_dict(self) -> dict:
        return {"A": self.A, "B": self.B, "B_err": self.B_err, "r_squared": self.r_squared,
                "samples": [[int(n), float(r)] for n, r in self.samples]}


def fit_noise_model(samples, weighted: bool = True) -> NoiseFit:
    """Fit ``rmse**2 = A / N + B`` by linear least squares in 1/N.

    With ``weighted=True`` every point is weighted by ``N**2``, i.e. by the
    inverse square of its expected spread, so the small-N points (largest
    absolute scatter) do not swamp the intercept.
    """
    samples = [(int(n), float(r)) for n, r in samples]
    if len({n for n, _ in samples}) < 3:
        raise ValueError("need at least 3 distinct shot counts")
    n = np.array([s[0] for s in samples], dtype=float)
    y = np.array([s[1] for s in samples]) ** 2
    x = 1.0 / n
    design = np.column_stack([x, np.ones_like(x)])
    sw = n if weighted else np.ones_like(n)
    coef, *_ = np.linalg.lstsq(design * sw[:, None], y * sw, rcond=None)
    A, B = (float(c) for c in coef)
    fitted = design @ coef
    ss_res = float(np.sum((y - fitted) ** 2))
    ss_tot = float(np.sum((y - y.mean()) ** 2))
    r2 = 1.0 - ss_res / ss_tot if ss_tot > 0 else 1.0
    dof = max(len(samples) - 2, 1)
    resid_w = (y - fitted) * sw
    sigma2 = float(np.sum(resid_w ** 2)) / dof
    cov = sigma2 * np.linalg.pinv((design * sw[:, None]).T @ (design * sw[:, None]))
    return NoiseFit(A, B, samples, r2, math.sqrt(max(cov[1, 1], 0.0)))
