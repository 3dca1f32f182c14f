"""Encode-compute-decode pipelines: convolution, DTFT, squared gradient and
edge detection, plus the image tiling they rely on.

Images are 2-D arrays indexed ``[row, col]`` and serialised row-major, so
pixel ``(a, b)`` of a tile ``W`` pixels wide sits at address ``a * W + b``.
The horizontal gradient runs along columns.
"""

from __future__ import annotations

from dataclasses import dataclass, field, replace

import numpy as np

from .circuit import (
    Circuit,
    NoiseConfig,
    _check_capacity,
    conditional_z_arrays,
    max_qubits,
    run_noisy_trajectories,
    run_statevector,
    sample_counts,
)
from .ehands import (
    ENCODED,
    ArithmeticTap,
    append_negation,
    append_product,
    append_weighted_sum,
)
from .errors import CapacityError, DomainError, IncompleteResultError
from .even import EvenEstimates, conditional_tallies
from .qcrank import QcrankLayout, build_qcrank, plan_layout


@dataclass
class PipelineJob:
    """A built circuit plus the plan for turning its counts into numbers."""

    circuit: Circuit
    layout: QcrankLayout
    result_taps: list[ArithmeticTap]
    measure_addresses: bool
    post_scale: float = 1.0
    post_offset: float = 0.0
    tile_id: int | None = None
    kind: str = ""
    meta: dict = field(default_factory=dict)

    def __post_init__(self):
        if not self.result_taps:
            raise ValueError("a job needs at least one result tap")
        qubits = list(self.layout.address_qubits) if self.measure_addresses else []
        qubits += [t.result_qubit for t in self.result_taps]
        self.circuit.measure(qubits)

    @property
    def tap_qubits(self) -> list[int]:
        return [t.result_qubit for t in self.result_taps]

    def summary(self) -> dict:
        return {
            "kind": self.kind,
            "layout": self.layout.summary(),
            "width": self.circuit.width,
            "two_qubit_gates": self.circuit.two_qubit_count,
            "two_qubit_depth": self.circuit.depth(two_qubit_only=True),
            "measured_qubits": list(self.circuit.measured_qubits),
        }


@dataclass
class JobResult:
    """Decoded tap expectations.

    ``estimates`` holds raw <Z> values with shape (2**n_a, n_taps) when the
    addresses were measured and (n_taps,) otherwise.
    """

    job: PipelineJob
    estimates: EvenEstimates
    shots: int

    @property
    def values(self) -> np.ndarray:
        return self.job.post_scale * self.estimates.x_hat + self.job.post_offset

    @property
    def std_err(self) -> np.ndarray:
        return abs(self.job.post_scale) * self.estimates.std_err


def _derived_seed(*parts) -> int:
    return int(np.random.SeedSequence([int(p) for p in parts]).generate_state(1)[0])


def execute_job(job: PipelineJob, shots: int = 0, seed: int = 0,
                noise: NoiseConfig | None = None) -> JobResult:
    """Run ``job``. ``shots=0`` returns exact expectations (noise ignored)."""
    circuit = job.circuit
    if shots < 0:
        raise ValueError("shots must be >= 0")
    _check_capacity(circuit.width)
    addresses = job.layout.address_qubits if job.measure_addresses else []
    if shots == 0:
        state = run_statevector(circuit)
        cols = [conditional_z_arrays(state, q, addresses)[0] for q in job.tap_qubits]
        values = np.stack(cols, axis=-1)
        if not job.measure_addresses:
            values = values[0]
        return JobResult(job, EvenEstimates.exact(values), 0)

    if noise is not None and noise.p2q > 0:
        noise = replace(noise, seed=_derived_seed(noise.seed, seed))
        counts = run_noisy_trajectories(circuit, noise, shots)
    else:
        counts = sample_counts(run_statevector(circuit), circuit.measured_qubits, shots, seed)
    n_addr_bits = len(addresses)
    address_bits = list(range(n_addr_bits))
    totals, hits = [], []
    for k in range(len(job.result_taps)):
        total, hit = conditional_tallies(counts, n_addr_bits + k, address_bits)
        totals.append(total)
        hits.append(hit)
    est = EvenEstimates.from_tallies(np.stack(totals, axis=-1), np.stack(hits, axis=-1))
    if not job.measure_addresses:
        est = EvenEstimates(est.x_hat[0], est.std_err[0], est.shots_used[0])
    return JobResult(job, est, shots)


def _as_unit_array(values, name) -> np.ndarray:
    arr = np.asarray(values, dtype=float)
    bad = ~(np.abs(arr) <= 1.0)
    if bad.any():
        raise DomainError(f"{name} has entries outside [-1, 1], e.g. {arr[bad].flat[0]!r}")
    return arr


# ---------------------------------------------------------------------------
# plain encoding


def build_qcrank_job(data) -> PipelineJob:
    """Encode ``data`` (n_channels, L) and read every channel back per address."""
    data = _as_unit_array(data, "data")
    if data.ndim == 1:
        data = data[None, :]
    layout = plan_layout(data.shape[1], data.shape[0])
    circuit = build_qcrank(layout, data)
    taps = [ArithmeticTap(q, ENCODED) for q in layout.data_qubits]
    return PipelineJob(circuit, layout, taps, measure_addresses=True, kind="roundtrip")


# ---------------------------------------------------------------------------
# element-wise product


def build_conv(f, g) -> PipelineJob:
    """Element-wise product f_i * g_i, read on the g qubit per address."""
    f = _as_unit_array(f, "f").ravel()
    g = _as_unit_array(g, "g").ravel()
    if f.size != g.size:
        raise ValueError(f"length mismatch: {f.size} vs {g.size}")
    layout = plan_layout(f.size, 2)
    circuit = build_qcrank(layout, np.stack([f, g]))
    tap = append_product(circuit, layout.data_qubit(0), layout.data_qubit(1))
    return PipelineJob(circuit, layout, [tap], measure_addresses=True, kind="conv")


def conv_values(result: JobResult):
    """(values, std_err) trimmed to the input length."""
    n = result.job.layout.length
    return result.values[:n, 0], result.std_err[:n, 0]


# ---------------------------------------------------------------------------
# DTFT by in-situ summation


@dataclass(frozen=True)
class FrequencyProbe:
    omega: float
    length: int

    @property
    def t_grid(self) -> np.ndarray:
        return np.arange(self.length)

    def cos_sin(self):
        wt = self.omega * self.t_grid
        return np.cos(wt), np.sin(wt)


def chirp_signal(n: int, f0: float = 0.02, f1: float = 0.12) -> np.ndarray:
    """Inspiral-like chirp ``f(t)**(2/3) * cos(2 pi f(t) t)`` scaled to max |h| = 1.

    ``f(t) = f0 + (f1 - f0) t / n`` in cycles per sample, so the
    instantaneous frequency of the carrier sweeps from f0 to ``2 f1 - f0``.
    """
    if n < 2:
        raise ValueError("need at least 2 samples")
    if not 0 < f0 < f1 < 0.5:
        raise ValueError(f"require 0 < f0 < f1 < 0.5, got f0={f0}, f1={f1}")
    t = np.arange(n)
    f = f0 + (f1 - f0) * t / n
    h = f ** (2.0 / 3.0) * np.cos(2 * np.pi * f * t)
    return h / np.max(np.abs(h))


def build_dtft(h, omegas) -> PipelineJob:
    """One product per trig channel, addresses summed in situ.

    Channel 0 holds h and serves as the shared product memory; channels
    ``2m+1`` and ``2m+2`` hold cos and sin of ``omegas[m] * t``.
    """
    h = _as_unit_array(h, "signal").ravel()
    L = h.size
    if L < 2 or L & (L - 1):
        raise ValueError(f"signal length {L} must be a power of two")
    omegas = [float(w) for w in np.atleast_1d(omegas)]
    if not omegas:
        raise ValueError("need at least one probe frequency")
    layout = plan_layout(L, 2 * len(omegas) + 1)
    limit = max_qubits()
    if layout.n_qubits > limit:
        fits = max(0, (limit - layout.n_a - 1) // 2)
        raise CapacityError(
            f"{len(omegas)} probes on {L} samples need {layout.n_qubits} qubits, limit is "
            f"{limit}; use at most {fits} probes per circuit"
        )
    rows = [h]
    for w in omegas:
        rows.extend(FrequencyProbe(w, L).cos_sin())
    circuit = build_qcrank(layout, np.stack(rows))
    memory = layout.data_qubit(0)
    taps = [append_product(circuit, memory, q) for q in layout.data_qubits[1:]]
    return PipelineJob(circuit, layout, taps, measure_addresses=False, post_scale=float(L),
                       kind="dtft", meta={"omegas": omegas})


@dataclass
class Spectrum:
    omega: np.ndarray
    I: np.ndarray
    Q: np.ndarray
    I_err: np.ndarray
    Q_err: np.ndarray

    @property
    def amplitude(self) -> np.ndarray:
        return np.hypot(self.I, self.Q)

    @property
    def phase(self) -> np.ndarray:
        return np.arctan2(self.Q, self.I)

    @property
    def amplitude_err(self) -> np.ndarray:
        a = self.amplitude
        with np.errstate(invalid="ignore", divide="ignore"):
            return np.hypot(self.I * self.I_err, self.Q * self.Q_err) / a

    @property
    def phase_err(self) -> np.ndarray:
        a2 = self.amplitude ** 2
        with np.errstate(invalid="ignore", divide="ignore"):
            return np.hypot(self.Q * self.I_err, self.I * self.Q_err) / a2

    @classmethod
    def concat(cls, parts) -> Spectrum:
        return cls(*(np.concatenate([getattr(p, f) for p in parts])
                     for f in ("omega", "I", "Q", "I_err", "Q_err")))


def dtft_spectrum(result: JobResult) -> Spectrum:
    """I = L <Z_cos>, Q = -L <Z_sin> for every probe of a DTFT job."""
    values, errs = result.values, result.std_err
    return Spectrum(np.array(result.job.meta["omegas"]), values[0::2], -values[1::2],
                    errs[0::2], errs[1::2])


def run_dtft(h, omegas, probes_per_circuit: int = 5, shots: int = 0, seed: int = 0,
             noise: NoiseConfig | None = None) -> Spectrum:
    """Split ``omegas`` into circuits of ``probes_per_circuit`` and run them."""
    omegas = list(np.atleast_1d(omegas))
    parts = []
    for k, start in enumerate(range(0, len(omegas), probes_per_circuit)):
        job = build_dtft(h, omegas[start:start + probes_per_circuit])
        job.tile_id = k
        parts.append(dtft_spectrum(execute_job(job, shots, _derived_seed(seed, k), noise)))
    return Spectrum.concat(parts)


# ---------------------------------------------------------------------------
# squared gradient


def _gradient_block(circuit, layout, minus_a, plus_a, minus_b, plus_b):
    """Negate the I(-) copies, average each pair, multiply the two Deltas.

    Returns the tap holding Delta**2 with Delta = (I+ - I-)/2.
    """
    append_negation(circuit, minus_a)
    append_negation(circuit, minus_b)
    left = append_weighted_sum(circuit, minus_a, plus_a, 0.5)
    right = append_weighted_sum(circuit, minus_b, plus_b, 0.5)
    return append_product(circuit, left.result_qubit, right.result_qubit)


def build_sqgrad(strip, left=None, right=None) -> PipelineJob:
    """Squared central difference ((I[i+1] - I[i-1]) / 2)**2 along a strip.

    ``left``/``right`` are the neighbours just outside the strip; when
    omitted the end pixels are replicated.
    """
    strip = _as_unit_array(strip, "strip").ravel()
    L = strip.size
    left = strip[0] if left is None else left
    right = strip[-1] if right is None else right
    padded = _as_unit_array(np.concatenate([[left], strip, [right]]), "strip neighbours")
    minus, plus = padded[:-2], padded[2:]
    layout = plan_layout(L, 4)
    circuit = build_qcrank(layout, np.stack([minus, plus, minus, plus]))
    q = layout.data_qubits
    tap = _gradient_block(circuit, layout, q[0], q[1], q[2], q[3])
    return PipelineJob(circuit, layout, [tap], measure_addresses=True, kind="sqgrad")


# ---------------------------------------------------------------------------
# edge detection


def weight_from_threshold(T: float) -> float:
    """Weight making ``EV > 0`` equivalent to ``Dx**2 + Dy**2 > T``.

    ``D`` is the raw central difference ``I[+1] - I[-1]`` (twice Delta).
    """
    if T <= 0:
        raise ValueError(f"threshold must be positive, got {T}")
    return T / (8.0 + T)


def weight_from_threshold_printed(T: float) -> float:
    """Alternative mapping ``w = T / (8 - T)``; it corresponds to an
    effective threshold of ``8 T / (8 - 2 T)`` instead of ``T``."""
    if not 0 < T < 4:
        raise ValueError(f"threshold must lie in (0, 4) for this mapping, got {T}")
    return T / (8.0 - T)


def effective_threshold(w: float) -> float:
    """Threshold on ``Dx**2 + Dy**2`` implied by weight ``w``."""
    return 8.0 * w / (1.0 - w)


def edge_weight(T, mapping=weight_from_threshold) -> float:
    w = float(mapping(T))
    if not 0.0 < w < 1.0:
        raise ValueError(f"threshold {T} maps to weight {w}, outside (0, 1)")
    return w


def build_edge_tile(tile, T: float, mapping=weight_from_threshold, tile_id=None) -> PipelineJob:
    """Edge test on one tile given with a one-pixel halo.

    ``tile`` has shape (h + 2, w + 2). The measured tap carries
    ``EV = (1 - w) * (Dx_sq + Dy_sq) / 2 - w`` per pixel, with Delta-squared
    gradients ``Dx_sq``, ``Dy_sq`` along columns and rows.
    """
    tile = _as_unit_array(tile, "tile")
    if tile.ndim != 2 or min(tile.shape) < 3:
        raise ValueError(f"tile with halo must be 2-D and at least 3x3, got {tile.shape}")
    w = edge_weight(T, mapping)
    core = (slice(1, -1), slice(1, -1))
    left, right = tile[1:-1, :-2], tile[1:-1, 2:]
    up, down = tile[:-2, 1:-1], tile[2:, 1:-1]
    height, width = tile[core].shape
    layout = plan_layout(height * width, 8)
    anc0, anc1 = layout.n_qubits, layout.n_qubits + 1
    circuit = build_qcrank(layout, np.stack([a.ravel() for a in
                                             (left, right, left, right, up, down, up, down)]),
                           width=layout.n_qubits + 2)
    q = layout.data_qubits
    gx = _gradient_block(circuit, layout, q[0], q[1], q[2], q[3])
    gy = _gradient_block(circuit, layout, q[4], q[5], q[6], q[7])
    # dephase the y branch before the two entangled branches are averaged
    circuit.h(anc0)
    circuit.cz(anc0, gy.result_qubit)
    mean = append_weighted_sum(circuit, gx.result_qubit, gy.result_qubit, 0.5)
    circuit.x(anc1)
    tap = append_weighted_sum(circuit, mean.result_qubit, anc1, 1.0 - w)
    return PipelineJob(circuit, layout, [tap], measure_addresses=True, tile_id=tile_id,
                       kind="edge", meta={"T": float(T), "w": w, "shape": (height, width)})


# ---------------------------------------------------------------------------
# images and tiles


@dataclass
class GrayImage:
    """Pixels mapped linearly from [0, maxval] onto [-1, 1]."""

    pixels: np.ndarray
    source_depth: int = 255

    def __post_init__(self):
        self.pixels = _as_unit_array(self.pixels, "image")
        if self.pixels.ndim != 2:
            raise ValueError("image must be 2-D")

    @property
    def height(self) -> int:
        return self.pixels.shape[0]

    @property
    def width(self) -> int:
        return self.pixels.shape[1]

    @classmethod
    def from_raw(cls, raw, maxval: int = 255) -> GrayImage:
        raw = np.asarray(raw, dtype=float)
        return cls(2.0 * raw / maxval - 1.0, maxval)

    def to_raw(self, maxval: int | None = None) -> np.ndarray:
        maxval = self.source_depth if maxval is None else maxval
        return np.rint((self.pixels + 1.0) / 2.0 * maxval).astype(np.int64)


@dataclass
class Tile:
    tile_id: int
    origin: tuple[int, int]
    shape: tuple[int, int]
    values: np.ndarray


@dataclass
class TilePlan:
    image_shape: tuple[int, int]
    tile_height: int
    tile_width: int
    tiles: list[Tile]
    halo: int = 1

    @property
    def tile_ids(self) -> list[int]:
        return [t.tile_id for t in self.tiles]


def plan_tiles(image, tile_height: int, tile_width: int, halo: int = 1) -> TilePlan:
    """Cut ``image`` into tiles carrying a replicated-edge halo.

    Tiles at a ragged border are filled out by edge replication; only
    their in-image part is kept when stitching.
    """
    pixels = image.pixels if isinstance(image, GrayImage) else np.asarray(image, dtype=float)
    H, W = pixels.shape
    if tile_height < 1 or tile_width < 1:
        raise ValueError("tile dimensions must be positive")
    n_rows, n_cols = -(-H // tile_height), -(-W // tile_width)
    pad_r = n_rows * tile_height - H
    pad_c = n_cols * tile_width - W
    padded = np.pad(pixels, ((halo, halo + pad_r), (halo, halo + pad_c)), mode="edge")
    tiles = []
    for r in range(n_rows):
        for c in range(n_cols):
            r0, c0 = r * tile_height, c * tile_width
            values = padded[r0:r0 + tile_height + 2 * halo, c0:c0 + tile_width + 2 * halo].copy()
            shape = (min(tile_height, H - r0), min(tile_width, W - c0))
            tiles.append(Tile(len(tiles), (r0, c0), shape, values))
    return TilePlan((H, W), tile_height, tile_width, tiles, halo)


def tile_and_stitch(image, plan: TilePlan, per_tile_results) -> np.ndarray:
    """Reassemble per-tile (tile_height, tile_width) results into a full image."""
    shape = image.pixels.shape if isinstance(image, GrayImage) else np.shape(image)
    if tuple(shape) != tuple(plan.image_shape):
        raise ValueError(f"plan was made for {plan.image_shape}, image is {tuple(shape)}")
    missing = [t.tile_id for t in plan.tiles if t.tile_id not in per_tile_results]
    if missing:
        raise IncompleteResultError(missing)
    out = np.full(plan.image_shape, np.nan)
    for t in plan.tiles:
        res = np.asarray(per_tile_results[t.tile_id], dtype=float)
        res = res.reshape(plan.tile_height, plan.tile_width)
        h, w = t.shape
        out[t.origin[0]:t.origin[0] + h, t.origin[1]:t.origin[1] + w] = res[:h, :w]
    return out


def _tile_grid(result: JobResult, shape) -> tuple[np.ndarray, np.ndarray]:
    n = shape[0] * shape[1]
    return (result.values[:n, 0].reshape(shape), result.std_err[:n, 0].reshape(shape))


@dataclass
class ImageResult:
    values: np.ndarray
    std_err: np.ndarray
    jobs: list[dict]


def run_sqgrad_image(image, strip_len: int = 16, shots: int = 0, seed: int = 0,
                     noise: NoiseConfig | None = None, transpose: bool = False) -> ImageResult:
    """Delta-squared horizontal gradient over 1 x ``strip_len`` strips.

    ``transpose=True`` gives the vertical gradient by running the same
    strips over the transposed image.
    """
    pixels = image.pixels if isinstance(image, GrayImage) else np.asarray(image, dtype=float)
    if transpose:
        pixels = pixels.T
    plan = plan_tiles(pixels, 1, strip_len)
    values, errs, jobs = {}, {}, []
    for t in plan.tiles:
        row = t.values[1]
        job = build_sqgrad(row[1:-1], left=row[0], right=row[-1])
        job.tile_id = t.tile_id
        res = execute_job(job, shots, _derived_seed(seed, t.tile_id), noise)
        values[t.tile_id], errs[t.tile_id] = _tile_grid(res, (1, strip_len))
        jobs.append(job.summary())
    v = tile_and_stitch(pixels, plan, values)
    e = tile_and_stitch(pixels, plan, errs)
    if transpose:
        v, e = v.T, e.T
    return ImageResult(v, e, jobs)


def run_edge_image(image, T: float, tile_height: int = 32, tile_width: int = 32, shots: int = 0,
                   seed: int = 0, noise: NoiseConfig | None = None,
                   mapping=weight_from_threshold) -> ImageResult:
    """Per-pixel EV over tiles; pixels with EV > 0 are edges."""
    pixels = image.pixels if isinstance(image, GrayImage) else np.asarray(image, dtype=float)
    plan = plan_tiles(pixels, tile_height, tile_width)
    values, errs, jobs = {}, {}, []
    for t in plan.tiles:
        job = build_edge_tile(t.values, T, mapping, tile_id=t.tile_id)
        res = execute_job(job, shots, _derived_seed(seed, t.tile_id), noise)
        values[t.tile_id], errs[t.tile_id] = _tile_grid(res, (tile_height, tile_width))
        jobs.append(job.summary())
    return ImageResult(tile_and_stitch(pixels, plan, values),
                       tile_and_stitch(pixels, plan, errs), jobs)


def edge_mask(ev) -> np.ndarray:
    return np.asarray(ev) > 0


def run_conv(f, g, shots: int = 0, seed: int = 0, noise: NoiseConfig | None = None):
    job = build_conv(f, g)
    values, errs = conv_values(execute_job(job, shots, seed, noise))
    return values, errs, job


def required_qubits_dtft(length: int, n_probes: int) -> int:
    return plan_layout(length, 1).n_a + 2 * n_probes + 1
