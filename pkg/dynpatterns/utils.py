"""Binary matrix files, JSON sidecars, CSV output, stable hashing and small numeric helpers."""

import hashlib
import json
import math
import os
import numpy as np

from dynpatterns.dynpatterns_core import DataError

TWO_PI = 2.0 * math.pi

# Binary matrix container: magic, dtype, shape, row-major little-endian payload.
MATRIX_MAGIC = b'DYNPMAT1'


def wrap_angle(x):
    """Wrap angles to [0, 2*pi). np.mod can round up to exactly 2*pi for tiny negative inputs."""
    w = np.mod(x, TWO_PI)
    return np.where(w >= TWO_PI, 0.0, w)


def angle_difference(a, b):
    # signed difference on the circle, in [-pi, pi)
    return np.mod(np.asarray(a) - np.asarray(b) + math.pi, TWO_PI) - math.pi


def save_matrix(path, array):
    """
    Write an array in the binary container format.

    Layout: 8-byte magic, uint32 length of the dtype string, ASCII dtype string, uint32 ndim,
    ndim x uint64 shape, then the C-ordered little-endian payload.
    """
    array = np.ascontiguousarray(array)
    dtype = array.dtype.newbyteorder('<')
    descr = dtype.str.encode('ascii')
    with open(path, 'wb') as f:
        f.write(MATRIX_MAGIC)
        f.write(np.uint32(len(descr)).tobytes())
        f.write(descr)
        f.write(np.uint32(array.ndim).tobytes())
        f.write(np.asarray(array.shape, dtype='<u8').tobytes())
        f.write(array.astype(dtype, copy=False).tobytes(order='C'))


def _read_header(f, path):
    magic = f.read(len(MATRIX_MAGIC))
    if magic != MATRIX_MAGIC:
        raise DataError(f"{path} is not a dynpatterns matrix file.")
    n = int(np.frombuffer(f.read(4), dtype='<u4')[0])
    dtype = np.dtype(f.read(n).decode('ascii'))
    ndim = int(np.frombuffer(f.read(4), dtype='<u4')[0])
    shape = tuple(int(s) for s in np.frombuffer(f.read(8 * ndim), dtype='<u8'))
    return dtype, shape, f.tell()


def load_matrix(path, mmap=False):
    if not os.path.exists(path):
        raise DataError(f"Missing matrix file {path}.")
    with open(path, 'rb') as f:
        dtype, shape, offset = _read_header(f, path)
        if mmap:
            return np.memmap(path, dtype=dtype, mode='r', offset=offset, shape=shape)
        data = np.frombuffer(f.read(), dtype=dtype)
    return data.reshape(shape).copy()


def write_sidecar(path, meta):
    with open(path, 'w') as f:
        json.dump(meta, f, indent=2, sort_keys=True, default=_json_default)
        f.write('\n')


def read_sidecar(path):
    if not os.path.exists(path):
        raise DataError(f"Missing sidecar file {path}.")
    with open(path, 'r') as f:
        return json.load(f)


def _json_default(obj):
    if isinstance(obj, np.integer):
        return int(obj)
    if isinstance(obj, np.floating):
        return float(obj)
    if isinstance(obj, np.ndarray):
        return obj.tolist()
    raise TypeError(f"Object of type {type(obj).__name__} is not JSON serializable")


def stable_hash(*items):
    """SHA-256 over JSON-serialized items and raw array bytes, in order."""
    h = hashlib.sha256()
    for item in items:
        if isinstance(item, np.ndarray):
            arr = np.ascontiguousarray(item)
            h.update(arr.dtype.str.encode('ascii'))
            h.update(str(arr.shape).encode('ascii'))
            h.update(arr.tobytes())
        else:
            h.update(json.dumps(item, sort_keys=True, default=_json_default).encode('utf-8'))
    return h.hexdigest()


def write_csv(path, columns, header):
    """Plain CSV with a one-line header. Values use repr precision so reruns are byte identical."""
    data = np.column_stack([np.asarray(c, dtype=float) for c in columns])
    np.savetxt(path, data, delimiter=',', header=','.join(header), comments='', fmt='%.17g')


def parse_int_list(text):
    """Parse '1,2,3' or '1..4' into a list of ints."""
    if text is None or text == '':
        return []
    if isinstance(text, (list, tuple)):
        return [int(t) for t in text]
    text = str(text).strip()
    if '..' in text:
        lo, hi = text.split('..')
        return list(range(int(lo), int(hi) + 1))
    return [int(t) for t in text.split(',') if t.strip() != '']
