import json
import struct

import numpy as np
import pytest

from solvers.errors import CorruptFileError
from storage.nmat import decode_nmat, encode_nmat, read_csv_matrix, read_matrix, read_nmat, write_nmat
from storage.outputs import read_json, read_positions, to_jsonable, write_json, write_positions


def test_nmat_golden_bytes():
    blob = encode_nmat(np.array([[1.0, -2.5]]))
    expected = (
        b"NMAT"
        + (1).to_bytes(4, "little")
        + (1).to_bytes(8, "little")
        + (2).to_bytes(8, "little")
        + struct.pack("<2d", 1.0, -2.5)
    )
    assert blob == expected
    assert decode_nmat(expected).tolist() == [[1.0, -2.5]]


def test_nmat_is_row_major():
    A = np.arange(6.0).reshape(2, 3)
    payload = encode_nmat(np.asfortranarray(A))[24:]
    assert struct.unpack("<6d", payload) == tuple(range(6))


def test_nmat_round_trip_is_bit_exact(tmp_path):
    rng = np.random.default_rng(0)
    for i in range(20):
        A = rng.standard_normal((int(rng.integers(1, 9)), int(rng.integers(1, 9)))) * 10.0 ** rng.integers(-300, 300)
        path = tmp_path / f"a{i}.nmat"
        write_nmat(path, A)
        B = read_nmat(path)
        assert B.tobytes() == A.tobytes()
        assert path.read_bytes() == encode_nmat(B)


@pytest.mark.parametrize("shape", [(0, 0), (0, 3), (2, 0)])
def test_nmat_rejects_empty(shape):
    with pytest.raises(ValueError):
        encode_nmat(np.zeros(shape))
    header = struct.pack("<4sIQQ", b"NMAT", 1, *shape)
    with pytest.raises(CorruptFileError):
        decode_nmat(header)


def test_nmat_rejects_corruption():
    good = encode_nmat(np.ones((2, 2)))
    with pytest.raises(CorruptFileError):
        decode_nmat(b"XMAT" + good[4:])
    with pytest.raises(CorruptFileError):
        decode_nmat(good[:4] + struct.pack("<I", 2) + good[8:])
    with pytest.raises(CorruptFileError):
        decode_nmat(good[:-8])
    with pytest.raises(CorruptFileError):
        decode_nmat(good[:10])


def test_csv_matrix_input(tmp_path):
    path = tmp_path / "G.csv"
    path.write_text("2,3\n1,2,3\n4,5,6.5\n")
    np.testing.assert_array_equal(read_csv_matrix(path), [[1, 2, 3], [4, 5, 6.5]])
    np.testing.assert_array_equal(read_matrix(path), read_csv_matrix(path))

    path.write_text("3,3\n1,2,3\n4,5,6\n")
    with pytest.raises(CorruptFileError):
        read_csv_matrix(path)
    path.write_text("two,three\n1,2\n")
    with pytest.raises(CorruptFileError):
        read_csv_matrix(path)


def test_read_matrix_dispatches_on_suffix(tmp_path):
    write_nmat(tmp_path / "M.nmat", np.eye(3))
    np.testing.assert_array_equal(read_matrix(tmp_path / "M.nmat"), np.eye(3))
    with pytest.raises(FileNotFoundError):
        read_matrix(tmp_path / "missing.nmat")


def test_json_carries_provenance_and_nulls(tmp_path):
    path = tmp_path / "out" / "selection.json"
    write_json(path, {"curve": np.array([1.0, np.nan]), "n": np.int64(3), "flag": np.bool_(True)}, {"seed": 1})
    doc = read_json(path)
    assert doc["curve"] == [1.0, None]
    assert doc["n"] == 3 and doc["flag"] is True
    assert doc["provenance"]["config"] == {"seed": 1}
    assert "version" in doc["provenance"]
    assert list(json.loads(path.read_text())) == sorted(doc)


def test_to_jsonable_nested():
    assert to_jsonable({"a": (np.float64(np.inf), [np.int32(2)])}) == {"a": [None, [2]]}


def test_positions_round_trip(tmp_path):
    pos = np.random.default_rng(1).uniform(-70, 70, size=(5, 3))
    write_positions(tmp_path / "positions.csv", pos)
    assert np.array_equal(read_positions(tmp_path / "positions.csv"), pos)

    (tmp_path / "bad.csv").write_text("x,y\n1,2\n")
    with pytest.raises(CorruptFileError):
        read_positions(tmp_path / "bad.csv")
