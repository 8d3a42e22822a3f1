"""Command-line front end: simulate, reconstruct, metrics, bench."""

from __future__ import annotations

import argparse
import csv
import hashlib
import sys
from pathlib import Path

import numpy as np

from . import bench as bench_mod
from . import container as cio
from .metrics import psnr, ssim
from .plots import save_convergence_plot, save_image_png, save_psnr_time_plot
from .simulate import (
    forward_simulate,
    make_delta_phantom,
    make_noise_model,
    make_shape_phantom,
    make_vascular_phantom,
    preprocess_matrix,
    synth_system_matrix,
)
from .solvers import SolverError, power_iteration_opnorm
from .wavelet import UdwtOperator

EXIT_BADFLAGS = 2
EXIT_IO = 3
EXIT_SOLVER = 4

_PHANTOMS = {
    "shape": make_shape_phantom,
    "vascular": make_vascular_phantom,
    "delta": make_delta_phantom,
}


class CliError(Exception):
    def __init__(self, code: int, message: str):
        super().__init__(message)
        self.code = code


def _parse_dims(text: str) -> tuple[int, ...]:
    try:
        dims = tuple(int(v) for v in text.split(","))
    except ValueError:
        raise CliError(EXIT_BADFLAGS, f"--dims: cannot parse {text!r}") from None
    if not dims or any(d < 1 for d in dims):
        raise CliError(EXIT_BADFLAGS, f"--dims: invalid grid {text!r}")
    return dims


def _sha256(path: Path) -> str:
    return hashlib.sha256(path.read_bytes()).hexdigest()


def _outdir(args) -> Path:
    out = Path(args.out)
    try:
        out.mkdir(parents=True, exist_ok=True)
    except OSError as exc:
        raise CliError(EXIT_IO, f"cannot create output directory: {exc}") from None
    return out


def cmd_simulate(args) -> int:
    if args.sigma <= 0:
        raise CliError(EXIT_BADFLAGS, "--sigma must be > 0")
    if args.rows < 1:
        raise CliError(EXIT_BADFLAGS, "--rows must be >= 1")
    dims = _parse_dims(args.dims)
    try:
        phantom = _PHANTOMS[args.phantom](dims)
    except ValueError as exc:
        raise CliError(EXIT_BADFLAGS, f"--phantom/--dims: {exc}") from None
    A = synth_system_matrix(dims, args.rows, seed=args.seed, model=args.model)
    noise = make_noise_model(args.rows, args.sigma, seed=args.seed + 1,
                             amplitude=args.noise_amp)
    b = forward_simulate(A, phantom, noise)
    out = _outdir(args)
    try:
        files = {
            "image": out / "phantom.mpir",
            "matrix": out / "matrix.mpir",
            "vector": out / "data.mpir",
        }
        cio.save_image(files["image"], phantom,
                       meta={"phantom": args.phantom, "seed": args.seed})
        cio.save_matrix(files["matrix"], A, meta={"seed": args.seed, "model": args.model})
        cio.save_vector(files["vector"], b,
                        meta={"sigma": repr(args.sigma), "seed": args.seed})
    except OSError as exc:
        raise CliError(EXIT_IO, f"write failed: {exc}") from None
    for kind, path in files.items():
        print(f"wrote {kind} {path} sha256={_sha256(path)}")
    return 0


def cmd_reconstruct(args) -> int:
    if args.lam < 0:
        raise CliError(EXIT_BADFLAGS, "--lambda must be >= 0")
    if args.eps <= 0:
        raise CliError(EXIT_BADFLAGS, "--eps must be > 0")
    if args.max_epochs < 1:
        raise CliError(EXIT_BADFLAGS, "--max-epochs must be >= 1")
    if args.algo not in bench_mod.ALGOS or args.algo == "fused-lasso":
        raise CliError(EXIT_BADFLAGS, f"--algo: unsupported algorithm {args.algo!r}")
    try:
        A0, _ = cio.load_matrix(args.matrix)
        b0 = cio.load_vector(args.data)
    except (OSError, cio.ContainerFormatError) as exc:
        raise CliError(EXIT_IO, f"cannot read inputs: {exc}") from None

    try:
        A, b = preprocess_matrix(A0, b0, args.snr_min, args.f_lo, args.f_hi)
        phi = None
        opnorm = None
        if args.algo != "regkz":
            phi = UdwtOperator(A.grid_dims, levels=args.levels)
        if args.algo.startswith("fista"):
            opnorm = power_iteration_opnorm(A)
            print(f"operator norm (largest eigenvalue of A*A): {opnorm:.12g}",
                  file=sys.stderr)
        report = bench_mod.solve_algo(
            args.algo, A, b, args.lam, phi=phi, opnorm=opnorm,
            max_epochs=args.max_epochs, eps_r=args.eps,
        )
    except (ValueError, SolverError) as exc:
        raise CliError(EXIT_SOLVER, f"solver failed: {exc}") from None

    out = _outdir(args)
    try:
        cio.save_image(out / "recon.mpir", report.x,
                       meta={"algo": args.algo, "lambda": repr(args.lam)})
        if report.x.ndim == 2:
            cio.write_pgm16(out / "recon.pgm", report.x)
            save_image_png(report.x, out / "recon.png", title=args.algo)
        with open(out / "convergence.csv", "w", newline="") as fh:
            writer = csv.writer(fh, lineterminator="\n")
            writer.writerow(["epoch", "eps_r", "residual", "seconds"])
            for i in range(report.epochs_run):
                writer.writerow([
                    i + 1,
                    repr(report.rel_change_history[i]),
                    repr(report.residual_history[i]),
                    repr(report.time_history[i]),
                ])
        cio.save_report(out / "report.mpir", report,
                        meta={"algo": args.algo, "lambda": repr(args.lam)})
        save_convergence_plot(report, out / "convergence.png",
                              title=f"{args.algo} convergence")
    except OSError as exc:
        raise CliError(EXIT_IO, f"write failed: {exc}") from None
    for name in ("recon.mpir", "convergence.csv", "report.mpir"):
        print(f"wrote {out / name}")
    print(f"stopped_by={report.stopped_by} epochs={report.epochs_run}")
    return 0


def cmd_metrics(args) -> int:
    try:
        ref = cio.load_image(args.ref)
        rec = cio.load_image(args.rec)
    except (OSError, cio.ContainerFormatError) as exc:
        raise CliError(EXIT_IO, f"cannot read inputs: {exc}") from None
    if args.sigma <= 0:
        raise CliError(EXIT_BADFLAGS, "--sigma must be > 0")
    if ref.shape != rec.shape:
        raise CliError(EXIT_BADFLAGS,
                       f"image dims mismatch: {rec.shape} vs {ref.shape}")
    if args.header:
        print("psnr_db,ssim")
    print(f"{psnr(rec, ref, args.sigma):.4f},{ssim(rec, ref):.4f}")
    return 0


def _parse_lambda_grid(text: str) -> np.ndarray:
    try:
        lo, hi, num = text.split(":")
        grid = np.geomspace(float(lo), float(hi), int(num))
    except ValueError:
        raise CliError(EXIT_BADFLAGS,
                       f"--lambda-grid: expected LO:HI:NUM, got {text!r}") from None
    if np.any(grid <= 0):
        raise CliError(EXIT_BADFLAGS, "--lambda-grid: bounds must be > 0")
    return grid


def cmd_bench(args) -> int:
    phantoms = args.phantoms.split(",")
    algos = args.algos.split(",")
    sigmas = [float(s) for s in args.sigmas.split(",")]
    for p in phantoms:
        if p not in _PHANTOMS:
            raise CliError(EXIT_BADFLAGS, f"--phantoms: unknown phantom {p!r}")
    for a in algos:
        if a not in bench_mod.ALGOS:
            raise CliError(EXIT_BADFLAGS, f"--algos: unknown algorithm {a!r}")
    if any(s <= 0 for s in sigmas):
        raise CliError(EXIT_BADFLAGS, "--sigmas must be > 0")
    if args.repeats < 1:
        raise CliError(EXIT_BADFLAGS, "--repeats must be >= 1")
    grid = _parse_lambda_grid(args.lambda_grid)
    setup = bench_mod.BenchSetup(
        dims=_parse_dims(args.dims), rows=args.rows, seed=args.seed,
        noise_amp=args.noise_amp, snr_min=args.snr_min,
        f_lo_hz=args.f_lo, f_hi_hz=args.f_hi,
    )
    rows, traces = bench_mod.run_benchmark(
        phantoms, sigmas, algos, setup, lambda_grid=grid,
        repeats=args.repeats, max_epochs=args.max_epochs, eps_r=args.eps,
        tune_epochs=args.tune_epochs,
        progress=lambda msg: print(msg, file=sys.stderr),
    )
    out = _outdir(args)
    try:
        with open(out / "results.csv", "w", newline="") as fh:
            writer = csv.DictWriter(fh, fieldnames=bench_mod.BENCH_COLUMNS,
                                    lineterminator="\n")
            writer.writeheader()
            for row in rows:
                writer.writerow(row)
        for (algo, phantom, sigma), tr in traces.items():
            name = f"trace_{algo}_{phantom}_{sigma:g}"
            with open(out / f"{name}.csv", "w", newline="") as fh:
                writer = csv.writer(fh, lineterminator="\n")
                writer.writerow(["epoch", "seconds", "eps_r", "residual", "psnr_db"])
                for i in range(len(tr["seconds"])):
                    writer.writerow([
                        i + 1, repr(tr["seconds"][i]), repr(tr["rel_change"][i]),
                        repr(tr["residual"][i]), repr(tr["psnr_db"][i]),
                    ])
        for phantom in phantoms:
            for sigma in sigmas:
                cell_traces = {
                    algo: (traces[(algo, phantom, sigma)]["seconds"],
                           traces[(algo, phantom, sigma)]["psnr_db"])
                    for algo in algos if (algo, phantom, sigma) in traces
                }
                if cell_traces:
                    save_psnr_time_plot(
                        cell_traces, out / f"bench_psnr_{phantom}_{sigma:g}.png",
                        title=f"{phantom}, sigma={sigma:g}",
                    )
    except OSError as exc:
        raise CliError(EXIT_IO, f"write failed: {exc}") from None

    print(f"wrote {out / 'results.csv'}")
    ok_rows = [r for r in rows if r["status"] == "ok"]
    if args.assert_order:
        by_cell = {(r["algo"], r["phantom"], r["sigma"]): r for r in ok_rows}
        for phantom in phantoms:
            for sigma in sigmas:
                ska = by_cell.get(("ska-nng", phantom, sigma))
                reg = by_cell.get(("regkz", phantom, sigma))
                if ska is None or reg is None:
                    print(f"assert-order: missing cells for {phantom}/{sigma:g}",
                          file=sys.stderr)
                    return 1
                if ska["psnr_db"] < reg["psnr_db"]:
                    print(
                        f"assert-order violated for {phantom}/{sigma:g}: "
                        f"ska-nng {ska['psnr_db']:.2f} dB < regkz "
                        f"{reg['psnr_db']:.2f} dB",
                        file=sys.stderr,
                    )
                    return 1
        print("assert-order: ok")
    return 0 if ok_rows or not any(r["status"].startswith("error") for r in rows) else 1


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="mpirecon",
        description="Wavelet-sparse row-action image reconstruction toolkit",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("simulate", help="generate phantom, system matrix and data")
    p.add_argument("--phantom", choices=sorted(_PHANTOMS), required=True)
    p.add_argument("--dims", required=True, help="grid shape, e.g. 32,32")
    p.add_argument("--sigma", type=float, required=True, help="phantom weight")
    p.add_argument("--rows", type=int, required=True, help="matrix row count")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--model", choices=("fourier-blur", "random-smooth"),
                   default="fourier-blur")
    p.add_argument("--noise-amp", type=float, default=5e-4)
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_simulate)

    p = sub.add_parser("reconstruct", help="run a solver on saved data")
    p.add_argument("--algo", required=True,
                   choices=[a for a in bench_mod.ALGOS if a != "fused-lasso"])
    p.add_argument("--lambda", dest="lam", type=float, default=0.0,
                   help="regularization weight (rho for regkz)")
    p.add_argument("--eps", type=float, default=1e-5)
    p.add_argument("--max-epochs", type=int, default=3000)
    p.add_argument("--snr-min", type=float, default=3.0)
    p.add_argument("--f-lo", type=float, default=70e3)
    p.add_argument("--f-hi", type=float, default=3000e3)
    p.add_argument("--levels", type=int, default=2, help="wavelet levels")
    p.add_argument("--matrix", required=True)
    p.add_argument("--data", required=True)
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_reconstruct)

    p = sub.add_parser("metrics", help="PSNR/SSIM of a reconstruction")
    p.add_argument("--ref", required=True)
    p.add_argument("--rec", required=True)
    p.add_argument("--sigma", type=float, default=1.0)
    p.add_argument("--header", action="store_true")
    p.set_defaults(func=cmd_metrics)

    p = sub.add_parser("bench", help="comparative benchmark grid")
    p.add_argument("--phantoms", default="shape")
    p.add_argument("--sigmas", default="10,50")
    p.add_argument("--algos", default="ska-nng,ska-st,fista-nng,fista-st,regkz")
    p.add_argument("--dims", default="32,32")
    p.add_argument("--rows", type=int, default=2048)
    p.add_argument("--seed", type=int, default=7)
    p.add_argument("--repeats", type=int, default=1)
    p.add_argument("--lambda-grid", default="1e-5:1e-1:13",
                   help="log grid LO:HI:NUM for the greedy PSNR search")
    p.add_argument("--tune-epochs", type=int, default=None,
                   help="epoch cap during lambda tuning (default: --max-epochs)")
    p.add_argument("--max-epochs", type=int, default=3000)
    p.add_argument("--eps", type=float, default=1e-5)
    p.add_argument("--snr-min", type=float, default=3.0)
    p.add_argument("--f-lo", type=float, default=70e3)
    p.add_argument("--f-hi", type=float, default=3000e3)
    p.add_argument("--noise-amp", type=float, default=5e-4)
    p.add_argument("--assert-order", action="store_true",
                   help="fail unless PSNR(ska-nng) >= PSNR(regkz) per cell")
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_bench)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except CliError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return exc.code


def entry() -> None:
    sys.exit(main())


if __name__ == "__main__":
    entry()
