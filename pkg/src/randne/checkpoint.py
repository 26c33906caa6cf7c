"""Versioned binary container for projection states and embeddings.

Layout (all integers little-endian):

    magic    8 bytes  b"RANDNE01"
    version  u32      format version (currently 1)
    kind     u8       1 = projection state, 2 = embedding
    n_nodes  u64
    dim      u64
    order    u64      (for embeddings: the provenance weights' order)
    norm     u8       0 = adjacency, 1 = transition
    seed     i64
    has_w    u8       1 if weights follow
    weights  (order + 1) f64, when has_w
    matrices per matrix: rows u64, cols u64, then rows*cols f64 row-major
    labels   count u64, then per label: length u64 + utf-8 bytes

A round trip reproduces the float payload bit for bit.
"""

from __future__ import annotations

import struct

import numpy as np

from .errors import DataError
from .embed import EmbeddingMatrix, ProjectionState, RngSpec, Weights

__all__ = [
    "save_state",
    "load_state",
    "save_embedding_binary",
    "load_embedding_binary",
    "write_embedding_text",
    "read_embedding_text",
    "MAGIC",
    "FORMAT_VERSION",
]

MAGIC = b"RANDNE01"
FORMAT_VERSION = 1
_KIND_STATE = 1
_KIND_EMBEDDING = 2
_NORM_TAGS = {"adjacency": 0, "transition": 1}
_NORM_NAMES = {v: k for k, v in _NORM_TAGS.items()}


def _write_header(fh, kind, n_nodes, dim, order, normalization, seed, weights):
    fh.write(MAGIC)
    fh.write(struct.pack("<IBQQQBq", FORMAT_VERSION, kind, n_nodes, dim, order,
                         _NORM_TAGS[normalization], seed))
    if weights is None:
        fh.write(struct.pack("<B", 0))
    else:
        fh.write(struct.pack("<B", 1))
        fh.write(np.asarray(weights.alpha, dtype="<f8").tobytes())


def _write_matrix(fh, m: np.ndarray):
    rows, cols = m.shape
    fh.write(struct.pack("<QQ", rows, cols))
    fh.write(np.ascontiguousarray(m, dtype="<f8").tobytes())


def _write_labels(fh, labels):
    fh.write(struct.pack("<Q", len(labels)))
    for lab in labels:
        raw = lab.encode("utf-8")
        fh.write(struct.pack("<Q", len(raw)))
        fh.write(raw)


def save_state(path, state: ProjectionState, labels=None):
    labels = labels if labels is not None else [str(i) for i in range(state.n_nodes)]
    with open(path, "wb") as fh:
        _write_header(fh, _KIND_STATE, state.n_nodes, state.dim, state.order,
                      state.normalization, state.rng.seed, state.weights)
        for p in state.parts:
            _write_matrix(fh, p)
        _write_labels(fh, labels)


def save_embedding_binary(path, emb: EmbeddingMatrix, labels=None):
    labels = labels if labels is not None else [str(i) for i in range(emb.n_nodes)]
    with open(path, "wb") as fh:
        _write_header(fh, _KIND_EMBEDDING, emb.n_nodes, emb.dim,
                      emb.weights.order, emb.normalization, emb.rng.seed,
                      emb.weights)
        _write_matrix(fh, emb.vectors)
        _write_labels(fh, labels)


class _Reader:
    def __init__(self, fh, path):
        self.fh = fh
        self.path = path

    def take(self, n: int) -> bytes:
        b = self.fh.read(n)
        if len(b) != n:
            raise DataError(f"{self.path}: truncated container")
        return b

    def unpack(self, fmt: str):
        return struct.unpack(fmt, self.take(struct.calcsize(fmt)))


def _read_header(r: _Reader):
    if r.take(len(MAGIC)) != MAGIC:
        raise DataError(f"{r.path}: not a RANDNE01 container")
    version, kind, n_nodes, dim, order, norm, seed = r.unpack("<IBQQQBq")
    if version != FORMAT_VERSION:
        raise DataError(f"{r.path}: unsupported format version {version}")
    if norm not in _NORM_NAMES:
        raise DataError(f"{r.path}: unknown normalization tag {norm}")
    (has_w,) = r.unpack("<B")
    weights = None
    if has_w:
        vals = np.frombuffer(r.take(8 * (order + 1)), dtype="<f8")
        weights = Weights(vals.tolist())
    return kind, n_nodes, dim, order, _NORM_NAMES[norm], seed, weights


def _read_matrix(r: _Reader) -> np.ndarray:
    rows, cols = r.unpack("<QQ")
    data = np.frombuffer(r.take(8 * rows * cols), dtype="<f8")
    return data.reshape(rows, cols).copy()


def _read_labels(r: _Reader) -> list[str]:
    (count,) = r.unpack("<Q")
    out = []
    for _ in range(count):
        (ln,) = r.unpack("<Q")
        out.append(r.take(ln).decode("utf-8"))
    return out


def load_state(path) -> tuple[ProjectionState, list[str]]:
    try:
        fh = open(path, "rb")
    except OSError as e:
        raise DataError(f"cannot read checkpoint {path}: {e}") from e
    with fh:
        r = _Reader(fh, path)
        kind, n_nodes, dim, order, norm, seed, weights = _read_header(r)
        if kind != _KIND_STATE:
            raise DataError(f"{path}: container holds an embedding, not a state")
        parts = [_read_matrix(r) for _ in range(order + 1)]
        labels = _read_labels(r)
    for p in parts:
        if p.shape != (n_nodes, dim):
            raise DataError(f"{path}: matrix shape mismatch")
    state = ProjectionState(n_nodes, dim, order, RngSpec(seed), norm, parts, weights)
    return state, labels


def load_embedding_binary(path) -> tuple[EmbeddingMatrix, list[str]]:
    try:
        fh = open(path, "rb")
    except OSError as e:
        raise DataError(f"cannot read embedding {path}: {e}") from e
    with fh:
        r = _Reader(fh, path)
        kind, n_nodes, dim, order, norm, seed, weights = _read_header(r)
        if kind != _KIND_EMBEDDING:
            raise DataError(f"{path}: container holds a state, not an embedding")
        vectors = _read_matrix(r)
        labels = _read_labels(r)
    if weights is None:
        weights = Weights((0.0, 1.0))
    return EmbeddingMatrix(vectors, weights, RngSpec(seed), norm), labels


def write_embedding_text(path, emb: EmbeddingMatrix, labels):
    """Header "N d", then one "label v1 ... vd" line per node with
    17-significant-digit floats."""
    v = emb.vectors
    with open(path, "w", encoding="utf-8") as fh:
        fh.write(f"{v.shape[0]} {v.shape[1]}\n")
        for i in range(v.shape[0]):
            row = " ".join(f"{x:.17g}" for x in v[i])
            fh.write(f"{labels[i]} {row}\n")


def read_embedding_text(path) -> tuple[np.ndarray, list[str]]:
    try:
        fh = open(path, "r", encoding="utf-8")
    except OSError as e:
        raise DataError(f"cannot read embedding {path}: {e}") from e
    with fh:
        header = fh.readline().split()
        if len(header) != 2:
            raise DataError(f"{path}: bad embedding header")
        n, d = int(header[0]), int(header[1])
        vectors = np.empty((n, d))
        labels = []
        for i in range(n):
            tok = fh.readline().split()
            if len(tok) != d + 1:
                raise DataError(f"{path}: bad embedding row {i}")
            labels.append(tok[0])
            vectors[i] = [float(x) for x in tok[1:]]
    return vectors, labels
