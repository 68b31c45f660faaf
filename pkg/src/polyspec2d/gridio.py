"""Quadrature axes and the ``polyspec2d/1`` grid container.

A container file is one JSON header line followed by the payload::

    {"version": "polyspec2d/1", "axes": [...], "kind": "real", "encoding": "binary"}
    <row-major little-endian float64 values>  or  <CSV text, one row per line>

Each axis is ``{"name", "min", "max", "count", "rule"}``; ``rule`` is
``"uniform"`` (endpoints included, trapezoid weights) or ``"gauss"``
(Gauss-Legendre nodes inside [min, max]).  Complex payloads interleave
real and imaginary parts.
"""
from __future__ import annotations

import io
import json
import os
import tempfile
from dataclasses import dataclass, field
from functools import cached_property
from pathlib import Path

import numpy as np

from .bessel import gauss_legendre
from .errors import InvalidInputError

VERSION = "polyspec2d/1"
RULES = ("uniform", "gauss")


@dataclass(frozen=True)
class Axis:
    name: str
    lo: float
    hi: float
    count: int
    rule: str = "uniform"

    def __post_init__(self):
        if self.rule not in RULES:
            raise InvalidInputError(f"unknown axis rule {self.rule!r}")
        if int(self.count) < 1:
            raise InvalidInputError(f"axis {self.name!r} is empty")
        if self.rule == "uniform" and self.count < 2 and self.hi != self.lo:
            raise InvalidInputError(f"axis {self.name!r} needs two samples")
        if not (np.isfinite(self.lo) and np.isfinite(self.hi)) or self.hi < self.lo:
            raise InvalidInputError(f"axis {self.name!r} has a bad range")

    @classmethod
    def point(cls, name: str, value: float) -> "Axis":
        """Single node with unit weight."""
        return cls(name, float(value), float(value), 1, "uniform")

    @cached_property
    def nodes(self) -> np.ndarray:
        if self.count == 1:
            return np.array([0.5 * (self.lo + self.hi)])
        if self.rule == "uniform":
            return np.linspace(self.lo, self.hi, self.count)
        t, _ = gauss_legendre(self.count)
        return 0.5 * (self.hi - self.lo) * (t + 1.0) + self.lo

    @cached_property
    def weights(self) -> np.ndarray:
        if self.count == 1:
            return np.array([1.0 if self.hi == self.lo else self.hi - self.lo])
        if self.rule == "uniform":
            h = (self.hi - self.lo) / (self.count - 1)
            w = np.full(self.count, h)
            w[0] = w[-1] = 0.5 * h
            return w
        _, w = gauss_legendre(self.count)
        return 0.5 * (self.hi - self.lo) * w

    def to_json(self) -> dict:
        return {"name": self.name, "min": self.lo, "max": self.hi,
                "count": self.count, "rule": self.rule}

    @classmethod
    def from_json(cls, d: dict) -> "Axis":
        try:
            return cls(str(d["name"]), float(d["min"]), float(d["max"]), int(d["count"]),
                       str(d.get("rule", "uniform")))
        except (KeyError, TypeError, ValueError) as exc:
            raise InvalidInputError(f"bad axis descriptor {d!r}") from exc


@dataclass
class GridContainer:
    axes: tuple[Axis, ...]
    values: np.ndarray
    meta: dict = field(default_factory=dict)

    def __post_init__(self):
        self.axes = tuple(self.axes)
        self.values = np.asarray(self.values)
        shape = tuple(a.count for a in self.axes)
        if self.values.shape != shape:
            raise InvalidInputError(f"values shape {self.values.shape} != axes {shape}")
        if self.values.size == 0:
            raise InvalidInputError("empty grid")
        if not np.all(np.isfinite(self.values)):
            raise InvalidInputError("grid values must be finite")

    @property
    def kind(self) -> str:
        return "complex" if np.iscomplexobj(self.values) else "real"

    def axis(self, name: str) -> Axis:
        for a in self.axes:
            if a.name == name:
                return a
        raise InvalidInputError(f"no axis named {name!r}")

    def header(self, encoding: str) -> dict:
        h = {"version": VERSION, "axes": [a.to_json() for a in self.axes],
             "kind": self.kind, "encoding": encoding}
        if self.meta:
            h["meta"] = self.meta
        return h

    def to_bytes(self, encoding: str = "binary") -> bytes:
        if encoding not in ("binary", "csv"):
            raise InvalidInputError("encoding must be 'binary' or 'csv'")
        head = (json.dumps(self.header(encoding), sort_keys=True) + "\n").encode()
        flat = self.values.ravel()
        if self.kind == "complex":
            flat = np.column_stack([flat.real, flat.imag]).ravel()
        flat = flat.astype("<f8")
        if encoding == "binary":
            return head + flat.tobytes()
        buf = io.StringIO()
        width = 2 if self.kind == "complex" else 1
        np.savetxt(buf, flat.reshape(-1, width), delimiter=",", fmt="%.17g")
        return head + buf.getvalue().encode()

    @classmethod
    def from_bytes(cls, data: bytes) -> "GridContainer":
        nl = data.find(b"\n")
        if nl < 0:
            raise InvalidInputError("missing container header")
        try:
            head = json.loads(data[:nl].decode())
        except (UnicodeDecodeError, json.JSONDecodeError) as exc:
            raise InvalidInputError("unreadable container header") from exc
        if head.get("version") != VERSION:
            raise InvalidInputError(f"unsupported container version {head.get('version')!r}")
        axes = tuple(Axis.from_json(a) for a in head.get("axes", []))
        if not axes:
            raise InvalidInputError("container has no axes")
        kind = head.get("kind", "real")
        width = 2 if kind == "complex" else 1
        size = int(np.prod([a.count for a in axes])) * width
        body = data[nl + 1:]
        if head.get("encoding") == "csv":
            text = body.decode().strip()
            flat = np.loadtxt(io.StringIO(text), delimiter=",", ndmin=1).ravel() if text else np.empty(0)
        elif head.get("encoding", "binary") == "binary":
            if len(body) != 8 * size:
                raise InvalidInputError(f"payload has {len(body)} bytes, expected {8 * size}")
            flat = np.frombuffer(body, dtype="<f8").astype(float)
        else:
            raise InvalidInputError(f"unknown encoding {head.get('encoding')!r}")
        if flat.size != size:
            raise InvalidInputError(f"payload has {flat.size} values, expected {size}")
        if kind == "complex":
            flat = flat[0::2] + 1j * flat[1::2]
        values = flat.reshape(tuple(a.count for a in axes))
        return cls(axes, values, head.get("meta", {}))

    def save(self, path, encoding: str = "binary") -> None:
        atomic_write(path, self.to_bytes(encoding))

    @classmethod
    def load(cls, path) -> "GridContainer":
        try:
            data = Path(path).read_bytes()
        except OSError as exc:
            raise InvalidInputError(f"cannot read {path}: {exc}") from exc
        return cls.from_bytes(data)


def atomic_write(path, data: bytes) -> None:
    """Write to a temporary file in the target directory, then rename."""
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    fd, tmp = tempfile.mkstemp(dir=path.parent, prefix=f".{path.name}.", suffix=".tmp")
    try:
        with os.fdopen(fd, "wb") as fh:
            fh.write(data)
        os.chmod(tmp, 0o644)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise
