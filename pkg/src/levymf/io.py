"""File plumbing: raw weight files, atomic text/CSV writes, seed derivation.

Weight file format: flat little-endian float32, row-major, with a JSON sidecar
``<file>.json`` holding ``{"rows": int, "cols": int}``.
"""

import csv
import hashlib
import io
import json
import os
import tempfile

import numpy as np

SEED_RULE = "child_seed = int.from_bytes(blake2b(f'{master_seed}:{job_id}', digest_size=8), 'little')"


def derive_seed(master_seed, *job):
    """64-bit child seed from a master seed and a job identifier."""
    key = f"{master_seed}:" + "/".join(str(j) for j in job)
    digest = hashlib.blake2b(key.encode(), digest_size=8).digest()
    return int.from_bytes(digest, "little")


def sidecar_path(path):
    return str(path) + ".json"


def write_weight_file(path, matrix):
    m = np.asarray(matrix)
    if m.ndim != 2:
        raise ValueError("weight matrices must be 2-D")
    atomic_write_bytes(path, m.astype("<f4", copy=False).tobytes(order="C"))
    atomic_write_text(sidecar_path(path), json.dumps({"rows": m.shape[0], "cols": m.shape[1]}))


def read_weight_file(path):
    """Load a weight matrix; malformed input raises ``OSError`` naming the byte offset."""
    try:
        with open(sidecar_path(path)) as fh:
            meta = json.load(fh)
        rows, cols = int(meta["rows"]), int(meta["cols"])
    except (ValueError, KeyError, TypeError) as exc:
        raise OSError(f"{sidecar_path(path)}: malformed sidecar ({exc})") from exc
    with open(path, "rb") as fh:
        raw = fh.read()
    if len(raw) == 0:
        raise OSError(f"{path}: empty weight file (offset 0)")
    expected = rows * cols * 4
    if len(raw) != expected:
        offset = min(len(raw), expected) - (min(len(raw), expected) % 4)
        raise OSError(
            f"{path}: size {len(raw)} bytes does not match {rows}x{cols} float32 "
            f"({expected} bytes); first bad byte offset {offset}"
        )
    if rows < 1 or cols < 1:
        raise OSError(f"{path}: sidecar declares an empty matrix (offset 0)")
    return np.frombuffer(raw, dtype="<f4").reshape(rows, cols)


def atomic_write_bytes(path, data):
    path = os.fspath(path)
    directory = os.path.dirname(os.path.abspath(path))
    os.makedirs(directory, exist_ok=True)
    fd, tmp = tempfile.mkstemp(dir=directory, prefix=".tmp-", suffix=os.path.basename(path))
    try:
        with os.fdopen(fd, "wb") as fh:
            fh.write(data)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


def atomic_write_text(path, text):
    atomic_write_bytes(path, text.encode("utf-8"))


def _fmt(v):
    if isinstance(v, (bool, np.bool_)):
        return str(bool(v)).lower()
    if isinstance(v, (int, np.integer)):
        return str(int(v))
    if isinstance(v, (float, np.floating)):
        return repr(float(v))
    return str(v)


def write_csv(path, header, rows):
    """Write rows with ``repr`` float formatting, so identical values give identical bytes."""
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(header)
    for row in rows:
        w.writerow([_fmt(v) for v in row])
    atomic_write_text(path, buf.getvalue())


def read_csv(path):
    with open(path, newline="") as fh:
        r = csv.reader(fh)
        header = next(r)
        return header, [row for row in r]
