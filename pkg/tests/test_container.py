import numpy as np
import pytest

from mpirecon.container import (
    MAGIC,
    ContainerFormatError,
    load_image,
    load_matrix,
    load_vector,
    read_container,
    save_image,
    save_matrix,
    save_report,
    save_vector,
    write_container,
    write_pgm16,
)
from mpirecon.simulate import synth_system_matrix
from mpirecon.solvers import ReconReport


def test_image_roundtrip_bit_identical(tmp_path):
    rng = np.random.default_rng(0)
    img = rng.standard_normal((9, 13))
    p = tmp_path / "img.mpir"
    save_image(p, img, meta={"note": "hello"})
    back = load_image(p)
    assert back.dtype == np.float64
    assert np.array_equal(back, img)  # bit-for-bit
    c = read_container(p)
    assert c.meta["note"] == "hello"


def test_vector_complex_roundtrip(tmp_path):
    rng = np.random.default_rng(1)
    v = rng.standard_normal(33) + 1j * rng.standard_normal(33)
    p = tmp_path / "vec.mpir"
    save_vector(p, v)
    back = load_vector(p)
    assert back.dtype == np.complex128
    assert np.array_equal(back, v)


def test_matrix_roundtrip_with_metadata(tmp_path):
    A = synth_system_matrix((8, 8), 40, seed=2)
    p = tmp_path / "mat.mpir"
    save_matrix(p, A)
    B, extra = load_matrix(p)
    assert np.array_equal(B.entries, A.entries)
    assert B.grid_dims == A.grid_dims
    assert np.array_equal(B.row_freq_hz, A.row_freq_hz)
    assert np.array_equal(B.row_snr, A.row_snr)
    assert extra == {}


def test_report_roundtrip(tmp_path):
    rep = ReconReport(
        x=np.zeros((2, 2)), epochs_run=3,
        rel_change_history=np.array([1.0, 0.5, 0.1]),
        residual_history=np.array([2.0, 1.0, 0.2]),
        time_history=np.array([0.1, 0.2, 0.3]),
        wall_time_s=0.35, stopped_by="tolerance",
    )
    p = tmp_path / "rep.mpir"
    save_report(p, rep)
    c = read_container(p)
    assert c.kind == "report"
    assert c.array.shape == (3, 3)
    assert c.meta["epochs_run"] == "3"
    assert c.meta["stopped_by"] == "tolerance"
    assert float(c.meta["wall_time_s"]) == 0.35
    assert c.meta["columns"] == "rel_change,residual,seconds"
    assert np.array_equal(c.array[:, 0], rep.rel_change_history)


def test_deterministic_bytes(tmp_path):
    img = np.arange(12.0).reshape(3, 4)
    p1, p2 = tmp_path / "a.mpir", tmp_path / "b.mpir"
    save_image(p1, img)
    save_image(p2, img)
    assert p1.read_bytes() == p2.read_bytes()


def test_bad_magic(tmp_path):
    p = tmp_path / "bad.mpir"
    p.write_bytes(b"NOPE!\n" + b"kind=image\n\n")
    with pytest.raises(ContainerFormatError):
        read_container(p)


def test_missing_header_terminator(tmp_path):
    p = tmp_path / "bad.mpir"
    p.write_bytes(MAGIC + b"kind=image\ndtype=f64\ndims=1")
    with pytest.raises(ContainerFormatError):
        read_container(p)


def test_malformed_header_line(tmp_path):
    p = tmp_path / "bad.mpir"
    p.write_bytes(MAGIC + b"kind=image\nnonsense\ndims=0\n\n")
    with pytest.raises(ContainerFormatError):
        read_container(p)


def test_duplicate_key(tmp_path):
    p = tmp_path / "bad.mpir"
    p.write_bytes(MAGIC + b"kind=image\nkind=image\ndtype=f64\ndims=0\n\n")
    with pytest.raises(ContainerFormatError):
        read_container(p)


def test_payload_length_mismatch(tmp_path):
    p = tmp_path / "bad.mpir"
    p.write_bytes(MAGIC + b"kind=image\ndtype=f64\ndims=4\n\n" + b"\x00" * 16)
    with pytest.raises(ContainerFormatError):
        read_container(p)


def test_unknown_kind_and_dtype(tmp_path):
    p = tmp_path / "bad.mpir"
    p.write_bytes(MAGIC + b"kind=blob\ndtype=f64\ndims=0\n\n")
    with pytest.raises(ContainerFormatError):
        read_container(p)
    p.write_bytes(MAGIC + b"kind=image\ndtype=f32\ndims=0\n\n")
    with pytest.raises(ContainerFormatError):
        read_container(p)
    with pytest.raises(ValueError):
        write_container(p, "blob", np.zeros(2))


def test_kind_mismatch_on_load(tmp_path):
    p = tmp_path / "v.mpir"
    save_vector(p, np.zeros(3))
    with pytest.raises(ContainerFormatError):
        load_image(p)
    with pytest.raises(ContainerFormatError):
        load_matrix(p)


def test_reserved_meta_key(tmp_path):
    with pytest.raises(ValueError):
        write_container(tmp_path / "x.mpir", "image", np.zeros(2),
                        meta={"dims": "2"})


def test_pgm16_output(tmp_path):
    img = np.array([[0.0, 0.5], [0.25, 1.0]])
    p = tmp_path / "img.pgm"
    write_pgm16(p, img)
    raw = p.read_bytes()
    header, pixels = raw.split(b"65535\n", 1)
    assert header == b"P5\n2 2\n"
    vals = np.frombuffer(pixels, dtype=">u2").reshape(2, 2)
    assert vals[1, 1] == 65535  # peak maps to maxval
    assert vals[0, 0] == 0
    assert vals[0, 1] == round(0.5 * 65535)
    with pytest.raises(ValueError):
        write_pgm16(p, np.zeros(4))


def test_pgm16_all_zero(tmp_path):
    p = tmp_path / "z.pgm"
    write_pgm16(p, np.zeros((2, 3)))
    pixels = p.read_bytes().split(b"65535\n", 1)[1]
    assert pixels == b"\x00" * 12
