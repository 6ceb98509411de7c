"""Dense tensors, rank-one terms, and CP decompositions.

Conventions used throughout the package:

* an order-``d`` tensor over shape ``(n_1, ..., n_d)`` is stored as a
  flat float64 array in row-major order (last index fastest);
* a rank-one term is ``scale * u_1 x u_2 x ... x u_d`` ("x" the outer
  product) with unit-norm factors and ``scale > 0`` — signs live in the
  first factor;
* all types are immutable after construction;
* randomness always enters through an explicit numpy ``Generator``.
"""

from __future__ import annotations

import json
import math
import struct
from dataclasses import dataclass
from functools import reduce

import numpy as np

# Factors must be unit vectors up to this tolerance after construction.
UNIT_TOL = 1e-12
# Factors further than this from unit norm are rejected instead of
# silently renormalized.
RENORM_TOL = 1e-6


@dataclass(frozen=True)
class Shape:
    """Mode sizes ``(n_1, ..., n_d)`` with ``d >= 2`` and every ``n_k >= 2``."""

    dims: tuple[int, ...]

    def __post_init__(self) -> None:
        dims = tuple(int(n) for n in self.dims)
        object.__setattr__(self, "dims", dims)
        if len(dims) < 2:
            raise ValueError(f"need at least two modes, got {dims}")
        if any(n < 2 for n in dims):
            raise ValueError(f"every mode size must be >= 2, got {dims}")

    @property
    def order(self) -> int:
        return len(self.dims)

    @property
    def segre_dim(self) -> int:
        """Dimension of the cone of rank-one tensors: 1 + sum_k (n_k - 1)."""
        return 1 + sum(n - 1 for n in self.dims)

    @property
    def ambient_dim(self) -> int:
        """Number of entries: prod_k n_k."""
        return math.prod(self.dims)

    def __str__(self) -> str:
        return "x".join(str(n) for n in self.dims)


def shape_constants(shape: Shape) -> tuple[int, int]:
    """Return ``(segre_dim, ambient_dim)`` for a shape."""
    return shape.segre_dim, shape.ambient_dim


def _readonly(a: np.ndarray) -> np.ndarray:
    out = np.array(a, dtype=np.float64, copy=True)
    out.flags.writeable = False
    return out


@dataclass(frozen=True)
class DenseTensor:
    """Flat row-major tensor values over a :class:`Shape`."""

    shape: Shape
    values: np.ndarray

    def __post_init__(self) -> None:
        v = np.asarray(self.values, dtype=np.float64).ravel()
        if v.size != self.shape.ambient_dim:
            raise ValueError(
                f"value count {v.size} does not match shape {self.shape} "
                f"({self.shape.ambient_dim} entries)"
            )
        if not np.all(np.isfinite(v)):
            raise ValueError("tensor entries must be finite")
        object.__setattr__(self, "values", _readonly(v))

    def norm(self) -> float:
        """Frobenius norm (invariant under any reshaping of the entries)."""
        return float(np.linalg.norm(self.values))

    def as_nd(self) -> np.ndarray:
        """Read-only view with one axis per mode."""
        return self.values.reshape(self.shape.dims)

    # -- serialization ------------------------------------------------

    def to_json(self) -> str:
        return json.dumps({"dims": list(self.shape.dims), "values": self.values.tolist()})

    @staticmethod
    def from_json(text: str) -> "DenseTensor":
        doc = json.loads(text)
        return DenseTensor(Shape(tuple(doc["dims"])), np.asarray(doc["values"], dtype=np.float64))

    def to_bytes(self) -> bytes:
        """Little-endian binary form: int64 mode count, int64 dims, f64 entries."""
        head = struct.pack("<q", self.shape.order)
        dims = np.asarray(self.shape.dims, dtype="<i8").tobytes()
        return head + dims + self.values.astype("<f8").tobytes()

    @staticmethod
    def from_bytes(blob: bytes) -> "DenseTensor":
        (d,) = struct.unpack_from("<q", blob, 0)
        dims = np.frombuffer(blob, dtype="<i8", count=d, offset=8)
        values = np.frombuffer(blob, dtype="<f8", offset=8 + 8 * d)
        return DenseTensor(Shape(tuple(int(n) for n in dims)), values)


@dataclass(frozen=True)
class Rank1Term:
    """``scale * u_1 x ... x u_d`` with unit factors and positive scale.

    Factors within ``RENORM_TOL`` of unit norm are renormalized on
    construction; anything further off is rejected.  A negative scale is
    folded into the first factor so that ``scale > 0`` always holds.
    """

    scale: float
    factors: tuple[np.ndarray, ...]

    def __post_init__(self) -> None:
        scale = float(self.scale)
        if scale == 0.0 or not math.isfinite(scale):
            raise ValueError("scale must be nonzero and finite")
        fixed = []
        for k, f in enumerate(self.factors):
            f = np.asarray(f, dtype=np.float64).ravel()
            nrm = float(np.linalg.norm(f))
            if abs(nrm - 1.0) > RENORM_TOL:
                raise ValueError(f"factor {k} has norm {nrm:.3e}, not a unit vector")
            fixed.append(f / nrm)
        if scale < 0.0:
            fixed[0] = -fixed[0]
            scale = -scale
        object.__setattr__(self, "scale", scale)
        object.__setattr__(self, "factors", tuple(_readonly(f) for f in fixed))

    @property
    def shape(self) -> Shape:
        return Shape(tuple(f.size for f in self.factors))

    def dense(self) -> DenseTensor:
        out = outer_product(self.factors)
        return DenseTensor(out.shape, self.scale * out.values)


@dataclass(frozen=True)
class CPDecomposition:
    """Sum of rank-one terms over a common shape."""

    shape: Shape
    terms: tuple[Rank1Term, ...]

    def __post_init__(self) -> None:
        object.__setattr__(self, "terms", tuple(self.terms))
        for t in self.terms:
            if t.shape != self.shape:
                raise ValueError(f"term shape {t.shape} does not match {self.shape}")

    @property
    def rank(self) -> int:
        return len(self.terms)

    def dense(self) -> DenseTensor:
        return cpd_eval(self)

    # -- serialization ------------------------------------------------

    def to_json(self) -> str:
        return json.dumps(
            {
                "dims": list(self.shape.dims),
                "terms": [
                    {"scale": t.scale, "factors": [f.tolist() for f in t.factors]}
                    for t in self.terms
                ],
            }
        )

    @staticmethod
    def from_json(text: str) -> "CPDecomposition":
        doc = json.loads(text)
        shape = Shape(tuple(doc["dims"]))
        terms = tuple(
            Rank1Term(t["scale"], tuple(np.asarray(f, dtype=np.float64) for f in t["factors"]))
            for t in doc["terms"]
        )
        return CPDecomposition(shape, terms)


# ---------------------------------------------------------------------------
# operations
# ---------------------------------------------------------------------------


def outer_product(vectors) -> DenseTensor:
    """Outer product of ``d`` vectors as a dense tensor.

    For row-major flattening the flat outer product is exactly the
    Kronecker product of the vectors, in mode order.
    """
    vecs = [np.asarray(v, dtype=np.float64).ravel() for v in vectors]
    for k, v in enumerate(vecs):
        if not np.any(v != 0.0):
            raise ValueError(f"factor {k} is the zero vector")
    flat = reduce(np.kron, vecs)
    return DenseTensor(Shape(tuple(v.size for v in vecs)), flat)


def rank1_inner(s: Rank1Term, t: Rank1Term) -> float:
    """Inner product of two rank-one terms.

    ``<s, t> = scale_s * scale_t * prod_k <u_k, v_k>`` — the product
    formula that makes tangent-space bases cheap to orthonormalize.
    """
    if s.shape != t.shape:
        raise ValueError("terms live in different spaces")
    out = s.scale * t.scale
    for u, v in zip(s.factors, t.factors):
        out *= float(u @ v)
    return out


def cpd_eval(cpd: CPDecomposition) -> DenseTensor:
    """Evaluate a CP decomposition to its dense tensor."""
    acc = np.zeros(cpd.shape.ambient_dim)
    for t in cpd.terms:
        acc = acc + t.scale * reduce(np.kron, t.factors)
    return DenseTensor(cpd.shape, acc)


def random_gaussian_tensor(shape: Shape, rng: np.random.Generator) -> DenseTensor:
    """Tensor with i.i.d. standard normal entries."""
    return DenseTensor(shape, rng.standard_normal(shape.ambient_dim))


def random_cpd(shape: Shape, r: int, rng: np.random.Generator) -> CPDecomposition:
    """Rank-``r`` decomposition with i.i.d. standard normal raw factors.

    Each term's raw factors are drawn from N(0, I) and normalized; the
    scale is the product of the drawn norms.
    """
    if r < 1:
        raise ValueError("rank must be positive")
    terms = []
    for _ in range(r):
        raw = [rng.standard_normal(n) for n in shape.dims]
        scale = 1.0
        factors = []
        for g in raw:
            nrm = float(np.linalg.norm(g))
            if nrm == 0.0:
                raise ValueError("degenerate zero draw")
            scale *= nrm
            factors.append(g / nrm)
        terms.append(Rank1Term(scale, tuple(factors)))
    return CPDecomposition(shape, tuple(terms))
