import csv

import numpy as np
import pytest

from mpirecon.cli import EXIT_BADFLAGS, EXIT_IO, EXIT_SOLVER, main
from mpirecon.container import load_matrix, read_container
from mpirecon.simulate import preprocess_matrix

DIMS = "16,16"
ROWS = "512"


def _simulate(out, seed="0", sigma="10", phantom="shape"):
    return main([
        "simulate", "--phantom", phantom, "--dims", DIMS, "--sigma", sigma,
        "--rows", ROWS, "--seed", seed, "--out", str(out),
    ])


def test_simulate_writes_and_reports_checksums(tmp_path, capsys):
    assert _simulate(tmp_path / "a") == 0
    lines = capsys.readouterr().out.strip().split("\n")
    assert len(lines) == 3
    kinds = [ln.split()[1] for ln in lines]
    assert kinds == ["image", "matrix", "vector"]
    for ln in lines:
        assert "sha256=" in ln
    for name in ("phantom.mpir", "matrix.mpir", "data.mpir"):
        assert (tmp_path / "a" / name).is_file()


def test_simulate_deterministic(tmp_path, capsys):
    assert _simulate(tmp_path / "a") == 0
    out_a = capsys.readouterr().out
    assert _simulate(tmp_path / "b") == 0
    out_b = capsys.readouterr().out
    sums_a = [ln.split("sha256=")[1] for ln in out_a.strip().split("\n")]
    sums_b = [ln.split("sha256=")[1] for ln in out_b.strip().split("\n")]
    assert sums_a == sums_b
    for name in ("phantom.mpir", "matrix.mpir", "data.mpir"):
        assert (tmp_path / "a" / name).read_bytes() == \
               (tmp_path / "b" / name).read_bytes()


def test_simulate_bad_sigma_names_flag(tmp_path, capsys):
    code = _simulate(tmp_path / "x", sigma="0")
    assert code == EXIT_BADFLAGS
    assert "--sigma" in capsys.readouterr().err


def test_simulate_grid_too_small_for_phantom(tmp_path, capsys):
    code = main([
        "simulate", "--phantom", "shape", "--dims", "8,8", "--sigma", "10",
        "--rows", "64", "--out", str(tmp_path / "x"),
    ])
    assert code == EXIT_BADFLAGS
    assert "error:" in capsys.readouterr().err


def _reconstruct(src, out, algo="ska-nng", lam="2.5e-2", extra=()):
    return main([
        "reconstruct", "--algo", algo, "--lambda", lam,
        "--matrix", str(src / "matrix.mpir"), "--data", str(src / "data.mpir"),
        "--out", str(out), *extra,
    ])


@pytest.fixture(scope="module")
def sim_dir(tmp_path_factory):
    out = tmp_path_factory.mktemp("sim")
    assert _simulate(out) == 0
    return out


def test_reconstruct_outputs(sim_dir, tmp_path, capsys):
    out = tmp_path / "rec"
    assert _reconstruct(sim_dir, out, lam="1e-3") == 0
    printed = capsys.readouterr().out
    assert "stopped_by=" in printed
    for name in ("recon.mpir", "recon.pgm", "recon.png", "convergence.csv",
                 "report.mpir", "convergence.png"):
        assert (out / name).is_file(), name
    c = read_container(out / "recon.mpir")
    assert c.kind == "image" and c.array.shape == (16, 16)
    assert float(c.meta["lambda"]) == 1e-3
    with open(out / "convergence.csv") as fh:
        rows = list(csv.reader(fh))
    assert rows[0] == ["epoch", "eps_r", "residual", "seconds"]
    assert len(rows) > 1


def test_reconstruct_scientific_notation_lambda(sim_dir, tmp_path):
    out = tmp_path / "rec"
    assert _reconstruct(sim_dir, out, lam="2.5e-2") == 0
    c = read_container(out / "recon.mpir")
    assert float(c.meta["lambda"]) == 0.025


def test_reconstruct_byte_identical_images(sim_dir, tmp_path):
    out1, out2 = tmp_path / "r1", tmp_path / "r2"
    assert _reconstruct(sim_dir, out1, lam="1e-3") == 0
    assert _reconstruct(sim_dir, out2, lam="1e-3") == 0
    # data artifacts are byte-identical; timing-bearing files are not compared
    assert (out1 / "recon.mpir").read_bytes() == (out2 / "recon.mpir").read_bytes()
    assert (out1 / "recon.pgm").read_bytes() == (out2 / "recon.pgm").read_bytes()


def test_reconstruct_fista_logs_operator_norm(sim_dir, tmp_path, capsys):
    out = tmp_path / "rec"
    assert _reconstruct(sim_dir, out, algo="fista-st", lam="1e-3",
                        extra=("--max-epochs", "300")) == 0
    err = capsys.readouterr().err
    marker = "operator norm (largest eigenvalue of A*A):"
    assert marker in err
    logged = float(err.split(marker)[1].strip().split()[0])
    # dense eigen-oracle on the identically preprocessed matrix
    A0, _ = load_matrix(sim_dir / "matrix.mpir")
    b0 = np.zeros(A0.shape[0])
    A, _ = preprocess_matrix(A0, b0)
    expect = float(np.linalg.eigvalsh(A.entries.conj().T @ A.entries)[-1])
    assert abs(logged - expect) <= 1e-6 * expect


def test_reconstruct_bad_flags(sim_dir, tmp_path, capsys):
    assert _reconstruct(sim_dir, tmp_path / "x", lam="-1") == EXIT_BADFLAGS
    assert "--lambda" in capsys.readouterr().err
    assert _reconstruct(sim_dir, tmp_path / "x",
                        extra=("--eps", "0")) == EXIT_BADFLAGS
    assert _reconstruct(sim_dir, tmp_path / "x",
                        extra=("--max-epochs", "0")) == EXIT_BADFLAGS


def test_reconstruct_missing_input_is_io_error(tmp_path, capsys):
    code = main([
        "reconstruct", "--algo", "ska-nng",
        "--matrix", str(tmp_path / "missing.mpir"),
        "--data", str(tmp_path / "missing2.mpir"),
        "--out", str(tmp_path / "x"),
    ])
    assert code == EXIT_IO
    assert "cannot read inputs" in capsys.readouterr().err


def test_reconstruct_overfiltering_is_solver_error(sim_dir, tmp_path, capsys):
    code = _reconstruct(sim_dir, tmp_path / "x",
                        extra=("--snr-min", "1e9"))
    assert code == EXIT_SOLVER
    assert "solver failed" in capsys.readouterr().err


def test_metrics_output(sim_dir, tmp_path, capsys):
    out = tmp_path / "rec"
    assert _reconstruct(sim_dir, out, lam="1e-3") == 0
    capsys.readouterr()
    code = main([
        "metrics", "--ref", str(sim_dir / "phantom.mpir"),
        "--rec", str(out / "recon.mpir"), "--sigma", "10", "--header",
    ])
    assert code == 0
    lines = capsys.readouterr().out.strip().split("\n")
    assert lines[0] == "psnr_db,ssim"
    p, s = lines[1].split(",")
    assert float(p) > 0.0
    assert 0.0 <= float(s) <= 1.0


def test_metrics_identical_images_print_inf(sim_dir, capsys):
    code = main([
        "metrics", "--ref", str(sim_dir / "phantom.mpir"),
        "--rec", str(sim_dir / "phantom.mpir"),
    ])
    assert code == 0
    assert capsys.readouterr().out.strip() == "inf,1.0000"


def test_metrics_dims_mismatch(sim_dir, tmp_path, capsys):
    other = tmp_path / "other"
    assert main([
        "simulate", "--phantom", "shape", "--dims", "32,32", "--sigma", "10",
        "--rows", "64", "--out", str(other),
    ]) == 0
    capsys.readouterr()
    code = main([
        "metrics", "--ref", str(sim_dir / "phantom.mpir"),
        "--rec", str(other / "phantom.mpir"),
    ])
    assert code == EXIT_BADFLAGS


BENCH_ARGS = [
    "bench", "--phantoms", "shape", "--sigmas", "10",
    "--algos", "ska-nng,regkz,fused-lasso", "--dims", DIMS, "--rows", ROWS,
    "--lambda-grid", "1e-4:1e-2:3", "--tune-epochs", "50",
    "--max-epochs", "300", "--repeats", "2", "--assert-order",
]


def _read_results(path):
    with open(path) as fh:
        reader = csv.DictReader(fh)
        return reader.fieldnames, list(reader)


def test_bench_csv_contract_and_determinism(tmp_path, capsys):
    out1, out2 = tmp_path / "b1", tmp_path / "b2"
    assert main(BENCH_ARGS + ["--out", str(out1)]) == 0
    assert "assert-order: ok" in capsys.readouterr().out
    assert main(BENCH_ARGS + ["--out", str(out2)]) == 0
    capsys.readouterr()

    fields, rows = _read_results(out1 / "results.csv")
    assert fields == ["algo", "phantom", "sigma", "lambda", "psnr_db", "ssim",
                      "epochs", "wall_time_s", "status"]
    by_algo = {r["algo"]: r for r in rows}
    assert by_algo["fused-lasso"]["status"] == "skipped: out of scope"
    assert by_algo["fused-lasso"]["psnr_db"] == ""
    for algo in ("ska-nng", "regkz"):
        assert by_algo[algo]["status"] == "ok"
        assert float(by_algo[algo]["psnr_db"]) > 0.0
        assert 0.0 <= float(by_algo[algo]["ssim"]) <= 1.0
        assert (out1 / f"trace_{algo}_shape_10.csv").is_file()
    assert (out1 / "bench_psnr_shape_10.png").is_file()

    # numeric results are run-to-run identical; only timings may differ
    _, rows2 = _read_results(out2 / "results.csv")
    for r1, r2 in zip(rows, rows2):
        for key in ("algo", "phantom", "sigma", "lambda", "psnr_db", "ssim",
                    "epochs", "status"):
            assert r1[key] == r2[key], key


def test_bench_bad_flags(tmp_path, capsys):
    base = ["bench", "--out", str(tmp_path / "x")]
    assert main(base + ["--phantoms", "donut"]) == EXIT_BADFLAGS
    assert main(base + ["--algos", "magic"]) == EXIT_BADFLAGS
    assert main(base + ["--sigmas", "-1"]) == EXIT_BADFLAGS
    assert main(base + ["--repeats", "0"]) == EXIT_BADFLAGS
    assert main(base + ["--lambda-grid", "oops"]) == EXIT_BADFLAGS
    capsys.readouterr()
