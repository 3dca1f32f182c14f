"""Command-line front end.

Every subcommand writes its tables into ``--out`` (a directory) together
with ``manifest.json`` describing the run. Exit codes: 0 ok, 2 usage,
3 capacity, 4 data format.
"""

from __future__ import annotations

import argparse
import csv
import io
import json
import math
import sys
import time
from dataclasses import asdict, dataclass, field
from pathlib import Path

import numpy as np

from . import analysis
from .circuit import NoiseConfig
from .errors import CapacityError, DataFormatError, DomainError, MonarqError
from .netpbm import read_pgm, write_pgm
from .pipelines import (
    GrayImage,
    build_conv,
    build_dtft,
    build_edge_tile,
    build_qcrank_job,
    build_sqgrad,
    chirp_signal,
    edge_mask,
    execute_job,
    plan_tiles,
    run_conv,
    run_dtft,
    run_edge_image,
    run_sqgrad_image,
    weight_from_threshold,
    weight_from_threshold_printed,
)

EXIT_OK, EXIT_USAGE, EXIT_CAPACITY, EXIT_DATA = 0, 2, 3, 4


@dataclass
class RunManifest:
    command: str
    seed: int
    shots: int
    noise: dict | None
    layout: dict
    gate_counts: dict
    wall_time: float
    calibration_scale: float | None = None
    rmse: float | None = None
    argv: list[str] = field(default_factory=list)
    params: dict = field(default_factory=dict)
    outputs: list[str] = field(default_factory=list)

    def to_json(self) -> str:
        return json.dumps(asdict(self), sort_keys=True, indent=2) + "\n"

    @classmethod
    def from_json(cls, text: str) -> RunManifest:
        return cls(**json.loads(text))


# ---------------------------------------------------------------------------
# input and output helpers


def read_sequence(path, normalize: bool = False) -> np.ndarray:
    """One value per line (first column); a non-numeric first line is a header."""
    try:
        text = Path(path).read_text()
    except OSError as exc:
        raise DataFormatError(f"cannot read {path}: {exc}") from None
    values = []
    for lineno, row in enumerate(csv.reader(io.StringIO(text)), start=1):
        if not row or not row[0].strip():
            continue
        try:
            values.append(float(row[0]))
        except ValueError:
            if lineno == 1:
                continue
            raise DataFormatError(f"{path}:{lineno}: not a number: {row[0]!r}") from None
    if not values:
        raise DataFormatError(f"{path}: no values")
    arr = np.array(values)
    if not np.all(np.isfinite(arr)):
        raise DataFormatError(f"{path}: non-finite value")
    if normalize:
        lo, hi = arr.min(), arr.max()
        arr = np.zeros_like(arr) if hi == lo else 2.0 * (arr - lo) / (hi - lo) - 1.0
    elif np.any(np.abs(arr) > 1.0):
        raise DataFormatError(f"{path}: values outside [-1, 1] (try --normalize)")
    return arr


def _fmt(v) -> str:
    v = float(v)
    return "nan" if math.isnan(v) else repr(v)


def write_table(path, header, rows):
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(header)
        for row in rows:
            writer.writerow([c if isinstance(c, (int, str)) else _fmt(c) for c in row])


def _noise(args) -> NoiseConfig | None:
    return NoiseConfig(args.p2q, args.seed) if args.p2q > 0 else None


def _noise_dict(args):
    return {"p2q": args.p2q, "seed": args.seed} if args.p2q > 0 else None


def _gate_counts(job) -> dict:
    c = job.circuit
    return {"total": len(c.gates), "two_qubit": c.two_qubit_count,
            "two_qubit_depth": c.depth(two_qubit_only=True), "by_kind": c.gate_counts()}


# ---------------------------------------------------------------------------
# subcommands; each returns (manifest fields, list of written files)


def cmd_conv(args, out: Path):
    f = read_sequence(args.f, args.normalize)
    g = read_sequence(args.g, args.normalize)
    values, errs, job = run_conv(f, g, args.shots, args.seed, _noise(args))
    truth = analysis.oracle_pointwise_product(f, g)
    path = out / "conv.csv"
    write_table(path, ["index", "value", "std_err", "oracle"],
                ([i, v, e, t] for i, (v, e, t) in enumerate(zip(values, errs, truth))))
    cal = analysis.calibrate_and_score(values, truth) if args.calibrate else None
    return dict(layout=job.summary(), gate_counts=_gate_counts(job),
                calibration_scale=cal.scale if cal else None,
                rmse=cal.rmse_after if cal else analysis.rmse(values, truth)), [path]


def cmd_dtft(args, out: Path):
    if args.signal == "chirp":
        h = chirp_signal(args.n)
    else:
        h = read_sequence(args.signal, args.normalize)
    try:
        freqs = [float(x) for x in args.freqs.split(",") if x.strip()]
    except ValueError:
        raise DataFormatError(f"bad --freqs list {args.freqs!r}") from None
    omegas = 2 * np.pi * np.array(freqs)
    spec = run_dtft(h, omegas, args.probes_per_circuit, args.shots, args.seed, _noise(args))
    I0, Q0 = analysis.oracle_dtft(h, omegas)
    path = out / "dtft.csv"
    rows = zip(freqs, spec.omega, spec.I, spec.Q, spec.I_err, spec.Q_err,
               spec.amplitude, spec.phase, I0, Q0)
    write_table(path, ["freq", "omega", "I", "Q", "I_err", "Q_err", "amplitude", "phase",
                       "I_oracle", "Q_oracle"], rows)
    job = build_dtft(h, omegas[:args.probes_per_circuit])
    return dict(layout=job.summary(), gate_counts=_gate_counts(job), rmse=float(
        np.sqrt(np.mean(np.concatenate([spec.I - I0, spec.Q - Q0]) ** 2)))), [path]


def _load_image(path) -> GrayImage:
    raw, maxval = read_pgm(path)
    return GrayImage.from_raw(raw, maxval)


def cmd_grad(args, out: Path):
    image = _load_image(args.image)
    axis = 0 if args.axis == "y" else 1
    res = run_sqgrad_image(image, args.strip_len, args.shots, args.seed, _noise(args),
                           transpose=axis == 0)
    truth = analysis.oracle_sqgrad_image(image.pixels, axis)
    pgm = out / "grad.pgm"
    write_pgm(pgm, np.rint(np.clip(res.values, 0.0, 1.0) * 255).astype(np.int64))
    table = out / "grad_residuals.csv"
    H, W = truth.shape
    write_table(table, ["row", "col", "value", "std_err", "oracle", "residual"],
                ([r, c, res.values[r, c], res.std_err[r, c], truth[r, c],
                  res.values[r, c] - truth[r, c]] for r in range(H) for c in range(W)))
    mask = truth > args.mask if args.mask is not None else None
    cal = None
    if args.calibrate:
        cal = analysis.calibrate_and_score(res.values, truth, mask)
    job = build_sqgrad(image.pixels[0, :args.strip_len])
    return dict(layout={**job.summary(), "strips": len(res.jobs)}, gate_counts=_gate_counts(job),
                calibration_scale=cal.scale if cal else None,
                rmse=cal.rmse_after if cal else analysis.rmse(res.values, truth)), [pgm, table]


def cmd_edge(args, out: Path):
    image = _load_image(args.image)
    mapping = weight_from_threshold_printed if args.mapping == "printed" else weight_from_threshold
    res = run_edge_image(image, args.threshold, args.tile_height, args.tile_width, args.shots,
                         args.seed, _noise(args), mapping)
    w = mapping(args.threshold)
    mask = edge_mask(res.values)
    pgm = out / "edges.pgm"
    write_pgm(pgm, np.where(mask, 255, 0))
    table = out / "edge_ev.csv"
    H, W = mask.shape
    write_table(table, ["row", "col", "ev", "std_err", "edge"],
                ([r, c, res.values[r, c], res.std_err[r, c], int(mask[r, c])]
                 for r in range(H) for c in range(W)))
    oracle = analysis.oracle_edge_ev(image.pixels, w)
    tile = plan_tiles(image.pixels, args.tile_height, args.tile_width).tiles[0]
    job = build_edge_tile(tile.values, args.threshold, mapping)
    return dict(layout={**job.summary(), "tiles": len(res.jobs), "w": w},
                gate_counts=_gate_counts(job), rmse=analysis.rmse(res.values, oracle)), [pgm, table]


def cmd_roundtrip(args, out: Path):
    if args.data:
        data = read_sequence(args.data, args.normalize)[None, :]
    else:
        rng = np.random.default_rng(args.seed)
        data = rng.uniform(-1, 1, size=(args.channels, args.length))
    job = build_qcrank_job(data)
    res = execute_job(job, args.shots, args.seed, _noise(args))
    n = data.shape[1]
    decoded, errs = res.values[:n], res.std_err[:n]
    path = out / "roundtrip.csv"
    write_table(path, ["address", "channel", "input", "decoded", "std_err"],
                ([a, j, data[j, a], decoded[a, j], errs[a, j]]
                 for a in range(n) for j in range(data.shape[0])))
    return dict(layout=job.summary(), gate_counts=_gate_counts(job),
                rmse=analysis.rmse(decoded.T, data)), [path]


def cmd_noise_fit(args, out: Path):
    if args.samples:
        samples = _read_samples(args.samples)
        layout, counts = {}, {}
    else:
        shot_list = [int(s) for s in args.shots_list.split(",")]
        rng = np.random.default_rng(args.seed)
        f, g = rng.uniform(-1, 1, size=(2, args.length))
        truth = f * g
        samples = []
        for k, shots in enumerate(shot_list):
            sq = []
            for rep in range(args.reps):
                values, _, job = run_conv(f, g, shots, args.seed * 1000003 + k * 1009 + rep,
                                          _noise(args))
                sq.append(np.mean((values - truth) ** 2))
            samples.append((shots, float(np.sqrt(np.mean(sq)))))
        job = build_conv(f, g)
        layout, counts = job.summary(), _gate_counts(job)
    fit = analysis.fit_noise_model(samples, weighted=not args.unweighted)
    table = out / "noise_fit.csv"
    write_table(table, ["shots", "rmse", "predicted"],
                ([n, r, p] for (n, r), p in zip(fit.samples, fit.predict([n for n, _ in samples]))))
    summary = out / "noise_fit.json"
    summary.write_text(json.dumps(fit.to_dict(), sort_keys=True, indent=2) + "\n")
    return dict(layout=layout, gate_counts=counts, params={"fit": fit.to_dict()}), [table, summary]


def _read_samples(path):
    try:
        text = Path(path).read_text()
    except OSError as exc:
        raise DataFormatError(f"cannot read {path}: {exc}") from None
    samples = []
    for lineno, row in enumerate(csv.reader(io.StringIO(text)), start=1):
        if not row or not row[0].strip():
            continue
        try:
            samples.append((int(float(row[0])), float(row[1])))
        except (ValueError, IndexError):
            if lineno == 1:
                continue
            raise DataFormatError(f"{path}:{lineno}: expected 'shots,rmse'") from None
    return samples


# ---------------------------------------------------------------------------
# argument parsing


def _common(p):
    p.add_argument("--shots", type=int, default=0, help="0 = exact expectation values")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--p2q", type=float, default=0.0,
                   help="depolarising error probability per two-qubit gate")
    p.add_argument("--out", default=".", help="output directory")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="monarq", description=__doc__.splitlines()[0])
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("conv", help="element-wise product of two sequences")
    p.add_argument("--f", required=True)
    p.add_argument("--g", required=True)
    p.add_argument("--normalize", action="store_true")
    p.add_argument("--calibrate", action="store_true", help="fit a single scale factor")
    _common(p)

    p = sub.add_parser("dtft", help="DTFT at chosen frequencies")
    p.add_argument("--signal", default="chirp", help="'chirp' or a CSV file")
    p.add_argument("--n", type=int, default=512, help="chirp length")
    p.add_argument("--freqs", required=True, help="comma-separated, cycles per sample")
    p.add_argument("--probes-per-circuit", type=int, default=5)
    p.add_argument("--normalize", action="store_true")
    _common(p)

    p = sub.add_parser("grad", help="squared central-difference gradient of a PGM image")
    p.add_argument("--image", required=True)
    p.add_argument("--strip-len", type=int, default=16)
    p.add_argument("--axis", choices=("x", "y"), default="x")
    p.add_argument("--calibrate", action="store_true")
    p.add_argument("--mask", type=float, default=None,
                   help="only score pixels whose true value exceeds this")
    _common(p)

    p = sub.add_parser("edge", help="thresholded gradient-energy edge mask of a PGM image")
    p.add_argument("--image", required=True)
    p.add_argument("--threshold", type=float, default=0.5)
    p.add_argument("--mapping", choices=("derived", "printed"), default="derived")
    p.add_argument("--tile-height", type=int, default=32)
    p.add_argument("--tile-width", type=int, default=32)
    _common(p)

    p = sub.add_parser("roundtrip", help="encode and decode data to check the codec")
    p.add_argument("--data", help="CSV file; random data when omitted")
    p.add_argument("--length", type=int, default=16)
    p.add_argument("--channels", type=int, default=1)
    p.add_argument("--normalize", action="store_true")
    _common(p)

    p = sub.add_parser("noise-fit", help="fit rmse**2 = A/N + B for the product pipeline")
    p.add_argument("--samples", help="CSV of shots,rmse; simulated when omitted")
    p.add_argument("--length", type=int, default=32)
    p.add_argument("--shots-list", default="1000,4000,16000,64000,256000")
    p.add_argument("--reps", type=int, default=4)
    p.add_argument("--unweighted", action="store_true")
    _common(p)
    return parser


COMMANDS = {"conv": cmd_conv, "dtft": cmd_dtft, "grad": cmd_grad, "edge": cmd_edge,
            "roundtrip": cmd_roundtrip, "noise-fit": cmd_noise_fit}


def run_command(argv) -> int:
    argv = list(argv)
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return EXIT_OK if exc.code == 0 else EXIT_USAGE
    out = Path(args.out)
    t0 = time.perf_counter()
    try:
        if args.shots < 0:
            raise ValueError("--shots must be >= 0")
        out.mkdir(parents=True, exist_ok=True)
        fields, written = COMMANDS[args.command](args, out)
    except CapacityError as exc:
        print(f"monarq: capacity: {exc}", file=sys.stderr)
        return EXIT_CAPACITY
    except (DataFormatError, DomainError) as exc:
        print(f"monarq: data: {exc}", file=sys.stderr)
        return EXIT_DATA
    except (MonarqError, ValueError) as exc:
        print(f"monarq: {exc}", file=sys.stderr)
        return EXIT_USAGE
    manifest = RunManifest(
        command=args.command, seed=args.seed, shots=args.shots, noise=_noise_dict(args),
        wall_time=time.perf_counter() - t0, argv=argv,
        outputs=[p.name for p in written] + ["manifest.json"], **fields)
    (out / "manifest.json").write_text(manifest.to_json())
    return EXIT_OK


def main(argv=None) -> int:
    return run_command(sys.argv[1:] if argv is None else argv)


if __name__ == "__main__":
    sys.exit(main())
