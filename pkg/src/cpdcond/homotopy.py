"""Predictor-corrector homotopy tracking for square CP systems.

A tensor space ``(n_1, ..., n_d)`` is *perfect* when ``Pi/Sigma`` is an
integer ``r`` (``Pi`` entries, ``Sigma`` the rank-one cone dimension).
The square polynomial system asking whether a target tensor ``A`` has a
complex rank-``r`` decomposition is

    F(x) = vec(A) - vec( sum_i  a_i1 (x) [1; a_i2] (x) ... (x) [1; a_id] )

with full vectors ``a_i1`` in C^{n_1} and pinned vectors ``a_ik`` in
C^{n_k - 1} for ``k >= 2`` — exactly ``r * Sigma = Pi`` unknowns.

Tracking deforms a start system ``F0`` with a known random solution
into the target system ``F1`` along

    H(x, t) = (1 - t) * gamma * F0(x) + t * F1(x),

where ``gamma`` is a random unit-modulus complex number.  The random
phase moves the deformation off the real axis: a straight real-to-real
line would cross the real discriminant whenever the target has no real
decomposition, while the complex path misses it almost surely.  The
scheme is an explicit Euler predictor on the Davidenko ODE
``dx/dt = -(dH/dx)^{-1} (dH/dt)`` with a short Newton corrector at each
node, adaptive step halving/expansion, and a final Newton polish at
``t = 1``.  The polish is also attempted from wherever a stalled path
stopped; the stall status stands unless the polish actually meets the
target tolerance.  Numerical failure never raises: it is recorded in
the result status and counted downstream.

The tracker is implemented over batches of paths (one LAPACK call per
predictor/corrector stage for a whole block); per-path arithmetic is
elementwise, so results are bit-identical however paths are grouped
into batches.  ``track`` runs a batch of one.
"""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass

import numpy as np

from cpdcond.tensors import CPDecomposition, DenseTensor, Rank1Term, Shape

_EXPAND_AFTER = 4  # consecutive accepted steps before the step grows
_POLISH_ITERS = 20  # Newton iterations allowed at the endpoint
_PIN_GUARD = 1e-8  # redraw threshold for pinned leading coordinates
_START_COND_MAX = 3e5  # redraw threshold on the equilibrated start Jacobian

# internal per-path state codes
_RUNNING, _CONV, _UNDER, _MAXED, _DIVER, _SINGULAR = range(6)


class TrackStatus(enum.Enum):
    CONVERGED = "converged"
    STEP_UNDERFLOW = "step_underflow"
    MAX_STEPS_EXCEEDED = "max_steps_exceeded"
    NEWTON_DIVERGENCE = "newton_divergence"
    SINGULAR_JACOBIAN = "singular_jacobian"


_STATUS_OF_CODE = {
    _CONV: TrackStatus.CONVERGED,
    _UNDER: TrackStatus.STEP_UNDERFLOW,
    _MAXED: TrackStatus.MAX_STEPS_EXCEEDED,
    _DIVER: TrackStatus.NEWTON_DIVERGENCE,
    _SINGULAR: TrackStatus.SINGULAR_JACOBIAN,
}


@dataclass(frozen=True)
class TrackerConfig:
    initial_step: float = 0.05
    min_step: float = 1e-7
    max_steps: int = 10_000
    newton_tol: float = 1e-12  # on the residual infinity-norm
    max_newton_iters: int = 3
    step_expansion: float = 1.5  # applied after _EXPAND_AFTER successes
    realness_tol: float = 1e-8

    def __post_init__(self) -> None:
        numerics = (
            self.initial_step,
            self.min_step,
            self.newton_tol,
            self.step_expansion,
            self.realness_tol,
        )
        if any(v <= 0 for v in numerics) or self.max_steps <= 0 or self.max_newton_iters <= 0:
            raise ValueError("all tracker parameters must be positive")
        if self.min_step >= self.initial_step:
            raise ValueError("min_step must be below initial_step")


@dataclass(frozen=True)
class PinnedVariables:
    """Flat complex unknowns of the square system.

    Layout is term-major, mode-major: for each term, the full mode-1
    vector followed by the pinned tails of modes ``2..d`` (their leading
    coordinate is the constant 1 and is not stored).
    """

    shape: Shape
    r: int
    data: np.ndarray

    def __post_init__(self) -> None:
        n = self.r * self.shape.segre_dim
        if n != self.shape.ambient_dim:
            raise ValueError(
                f"rank {self.r} in {self.shape} is not a perfect space "
                f"({self.r} * {self.shape.segre_dim} != {self.shape.ambient_dim})"
            )
        d = np.asarray(self.data, dtype=np.complex128).ravel()
        if d.size != n:
            raise ValueError(f"expected {n} variables, got {d.size}")
        d = d.copy()
        d.flags.writeable = False
        object.__setattr__(self, "data", d)

    def imag_norm(self) -> float:
        return float(np.linalg.norm(self.data.imag))


@dataclass(frozen=True)
class TrackResult:
    status: TrackStatus
    solution: PinnedVariables | None
    steps_taken: int
    final_residual: float


class _System:
    """Evaluation and Jacobian plumbing for one (shape, r) system.

    Operates on batches: ``x`` has shape ``(B, r * Sigma)`` and the
    Jacobian is ``(B, Pi, r * Sigma)`` with columns ordered term-major
    then mode-major (the derivative of the *evaluation*, i.e. of
    ``-residual``).
    """

    def __init__(self, shape: Shape, r: int):
        dims = shape.dims
        self.shape = shape
        self.dims = dims
        self.d = len(dims)
        self.r = r
        self.sigma = shape.segre_dim
        self.pi = shape.ambient_dim
        if r * self.sigma != self.pi:
            raise ValueError(
                f"rank {r} in {shape} is not a perfect space "
                f"({r} * {self.sigma} != {self.pi})"
            )
        # per-mode column offsets inside a term's Sigma-slot
        self.widths = [dims[0]] + [n - 1 for n in dims[1:]]
        self.offsets = np.concatenate([[0], np.cumsum(self.widths)])
        self._jbuf: np.ndarray | None = None
        self._fbuf: list[np.ndarray] | None = None

    # -- factor bookkeeping -------------------------------------------

    def factors(self, x: np.ndarray) -> list[np.ndarray]:
        """Full factor arrays [(B, r, n_k)] with pinned ones restored.

        Tail-mode factors live in per-mode scratch buffers whose leading
        column is written to one at allocation and never touched again;
        each call overwrites the previous call's factors, which is fine
        because every consumer finishes with them before evaluating at
        another point.
        """
        b = x.shape[0]
        x3 = x.reshape(b, self.r, self.sigma)
        if self._fbuf is None or self._fbuf[0].shape[0] < b:
            self._fbuf = [
                np.ones((b, self.r, n), dtype=np.complex128) for n in self.dims[1:]
            ]
        out = [x3[:, :, : self.dims[0]]]
        for k in range(1, self.d):
            lo, hi = self.offsets[k], self.offsets[k + 1]
            f = self._fbuf[k - 1][:b]
            f[:, :, 1:] = x3[:, :, lo:hi]
            out.append(f)
        return out

    def _chains(self, fs: list[np.ndarray]):
        """Prefix and suffix Khatri-Rao chains over the factor list.

        ``pres[m]`` is the row-wise product of factors before mode m,
        ``sufs[m]`` the product of factors from mode m on.  ``sufs[0]``
        is never read (the Jacobian only pairs a prefix with the suffix
        past the differentiated mode), so it is left as a placeholder
        rather than paying for the largest product in the chain.
        """
        b, r = fs[0].shape[0], self.r
        one = np.ones((b, r, 1), dtype=np.complex128)
        pres = [one, fs[0]]
        for f in fs[1:]:
            pres.append((pres[-1][:, :, :, None] * f[:, :, None, :]).reshape(b, r, -1))
        sufs = [one, fs[-1]]
        for f in fs[-2:0:-1]:
            sufs.append((f[:, :, :, None] * sufs[-1][:, :, None, :]).reshape(b, r, -1))
        sufs.append(None)
        sufs.reverse()
        return pres, sufs

    def evaluate(self, x: np.ndarray) -> np.ndarray:
        """Batched evaluation vec(cpd(x)), shape (B, Pi)."""
        fs = self.factors(x)
        flat = fs[0]
        for f in fs[1:]:
            flat = (flat[:, :, :, None] * f[:, :, None, :]).reshape(x.shape[0], self.r, -1)
        return flat.sum(axis=1)

    def eval_jac(self, x: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
        """Batched evaluation and Jacobian of the evaluation."""
        b = x.shape[0]
        fs = self.factors(x)
        pres, sufs = self._chains(fs)
        e = pres[self.d].sum(axis=1)

        if self._jbuf is None or self._jbuf.shape[0] < b:
            # structural zeros are written once; live entries are
            # overwritten on every call, so the buffer can be reused
            self._jbuf = np.zeros((b, self.pi, self.r, self.sigma), dtype=np.complex128)
        jac = self._jbuf[:b]
        for m in range(self.d):
            pre, suf = pres[m], sufs[m + 1]
            np_, ns = pre.shape[2], suf.shape[2]
            n = self.dims[m]
            ps = np.moveaxis(pre[:, :, :, None] * suf[:, :, None, :], 1, 3)  # (B,pre,post,r)
            jview = jac.reshape(b, np_, n, ns, self.r, self.sigma)
            col = self.offsets[m]
            # one paired-fancy-index write per mode: entry (row j, column
            # col+j) gets the same prefix-suffix block for every j, and
            # numpy fronts the paired axis, so ps broadcasts over it
            rows = np.arange(n) if m == 0 else np.arange(1, n)
            cols = col + rows if m == 0 else col + rows - 1
            jview[:, :, rows, :, :, cols] = ps[None]
        return e, jac.reshape(b, self.pi, self.r * self.sigma)


def _solve_block(a: np.ndarray, rhs: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """Batched LU solve that never raises; returns (solution, ok mask).

    Columns are equilibrated to unit 2-norm first: the pinning divides
    factor entries by leading coordinates, which can leave Jacobian
    columns many orders of magnitude apart, and plain LU loses several
    digits of the Newton step to that artificial skew.  The scaling
    happens in place — callers never reuse the matrix.
    """
    b = a.shape[0]
    ok = np.ones(b, dtype=bool)
    re, im = a.real, a.imag
    col = np.sqrt(np.einsum("bij,bij->bj", re, re) + np.einsum("bij,bij->bj", im, im))
    col[col == 0.0] = 1.0
    a /= col[:, None, :]
    try:
        sol = np.linalg.solve(a, rhs[:, :, None])[:, :, 0] / col
    except np.linalg.LinAlgError:
        sol = np.zeros_like(rhs)
        for i in range(b):
            try:
                sol[i] = np.linalg.solve(a[i], rhs[i]) / col[i]
            except np.linalg.LinAlgError:
                ok[i] = False
    bad = ~np.isfinite(sol).all(axis=1)
    if bad.any():
        ok &= ~bad
        sol[bad] = 0.0
    return sol, ok


def _track_block(
    sys: _System,
    x0: np.ndarray,
    f0: np.ndarray,
    f1: np.ndarray,
    gamma: np.ndarray,
    cfg: TrackerConfig,
):
    """Track a block of paths; returns (codes, x, steps, final_residual).

    All control flow is per-path (boolean masks); no arithmetic mixes
    paths, so outcomes do not depend on how paths are blocked together.
    """
    b = x0.shape[0]
    x = np.array(x0, dtype=np.complex128)
    t = np.zeros(b)
    h = np.full(b, cfg.initial_step)
    streak = np.zeros(b, dtype=np.int64)
    steps = np.zeros(b, dtype=np.int64)
    code = np.full(b, _RUNNING, dtype=np.int8)
    final_res = np.full(b, np.inf)
    tol = cfg.newton_tol * (1.0 + np.linalg.norm(f1, axis=1))

    # a start solution that already solves the target system skips
    # straight to the endpoint polish (stationary path)
    direct = np.max(np.abs(f1 - sys.evaluate(x)), axis=1) <= tol
    t[direct] = 1.0

    # cached Euler direction per path: J^{-1} dH/dt depends only on the
    # current node, so a rejected step reuses it for the halved retry
    y_dir = np.zeros_like(x)
    y_ok = np.zeros(b, dtype=bool)
    y_live = np.zeros(b, dtype=bool)

    while True:
        run = np.flatnonzero((code == _RUNNING) & (t < 1.0))
        if run.size == 0:
            break
        xg = x[run]
        tg = t[run]
        gg = gamma[run]
        f0g, f1g = f0[run], f1[run]
        tolg = tol[run]
        hg = np.minimum(h[run], 1.0 - tg)

        # Euler predictor on the Davidenko ODE
        stale = run[~y_live[run]]
        if stale.size:
            e, jac = sys.eval_jac(x[stale])
            ht = -gamma[stale, None] * (f0[stale] - e) + (f1[stale] - e)
            y_dir[stale], y_ok[stale] = _solve_block(jac, ht)
            y_live[stale] = True
        y = y_dir[run]
        ok = y_ok[run]
        s_t = (1.0 - tg) * gg + tg
        xp = xg + (hg / s_t)[:, None] * y
        tn = tg + hg
        tn[hg >= 1.0 - tg] = 1.0
        w0 = (1.0 - tn) * gg
        s_n = w0 + tn

        # Newton corrector at the new node
        xc = xp
        accepted = np.zeros(run.size, dtype=bool)
        pending = ok.copy()
        for _ in range(cfg.max_newton_iters):
            sub = np.flatnonzero(pending)
            if sub.size == 0:
                break
            e2, j2 = sys.eval_jac(xc[sub])
            hval = w0[sub, None] * (f0g[sub] - e2) + tn[sub, None] * (f1g[sub] - e2)
            y2, ok2 = _solve_block(j2, hval)
            xn = xc[sub] + y2 / s_n[sub, None]
            e3 = sys.evaluate(xn)
            r3 = np.max(np.abs(w0[sub, None] * (f0g[sub] - e3) + tn[sub, None] * (f1g[sub] - e3)), axis=1)
            good = ok2 & np.isfinite(r3)
            xc[sub[good]] = xn[good]
            hit = good & (r3 <= tolg[sub])
            accepted[sub[hit]] = True
            pending[sub] = good & ~hit

        # bookkeeping: accepted nodes advance, rejected halve the step
        acc = run[accepted]
        rej = run[~accepted]
        x[acc] = xc[accepted]
        t[acc] = tn[accepted]
        y_live[acc] = False
        streak[acc] += 1
        grow = acc[streak[acc] >= _EXPAND_AFTER]
        h[grow] *= cfg.step_expansion
        streak[grow] = 0
        h[rej] = np.minimum(h[rej], 1.0 - t[rej]) / 2.0
        streak[rej] = 0
        code[rej[h[rej] < cfg.min_step]] = _UNDER
        steps[run] += 1
        over = run[(steps[run] >= cfg.max_steps)]
        code[over[(code[over] == _RUNNING) & (t[over] < 1.0)]] = _MAXED

    # endpoint polish: plain Newton on the target system at t = 1.
    # Paths that stalled short of the end (step underflow / step budget)
    # are polished from where they stopped as well: a corrector that
    # dies within a hair of t = 1 usually leaves plain Newton enough to
    # close onto the target, and a solution that meets the target
    # tolerance is a success no matter how ragged the approach was.
    # When the polish does not converge the stall state stands.
    stalled = code.copy()
    resc = np.flatnonzero((stalled == _UNDER) | (stalled == _MAXED))
    x_stall, res_stall = x[resc].copy(), final_res[resc].copy()
    pol = np.flatnonzero((code == _RUNNING) | (code == _UNDER) | (code == _MAXED))
    if pol.size:
        res = np.max(np.abs(f1[pol] - sys.evaluate(x[pol])), axis=1)
        final_res[pol] = res
        live = np.isfinite(res) & (res > tol[pol])
        code[pol[res <= tol[pol]]] = _CONV
        pol = pol[live]
        for _ in range(_POLISH_ITERS):
            if pol.size == 0:
                break
            e, jac = sys.eval_jac(x[pol])
            y, ok = _solve_block(jac, f1[pol] - e)
            xn = x[pol] + y
            res = np.max(np.abs(f1[pol] - sys.evaluate(xn)), axis=1)
            finite = np.isfinite(res) & np.isfinite(xn).all(axis=1)
            good = ok & finite
            x[pol[good]] = xn[good]
            final_res[pol[good]] = res[good]
            code[pol[~ok]] = _SINGULAR
            done = good & (res <= tol[pol])
            code[pol[done]] = _CONV
            pol = pol[good & ~done]
        code[pol] = _DIVER  # polished out the iteration budget
    code[code == _RUNNING] = _DIVER
    lost = code[resc] != _CONV
    code[resc[lost]] = stalled[resc[lost]]
    x[resc[lost]] = x_stall[lost]
    final_res[resc[lost]] = res_stall[lost]

    return code, x, steps, final_res


# ---------------------------------------------------------------------------
# public operations
# ---------------------------------------------------------------------------


def build_start(
    shape: Shape, r: int, rng: np.random.Generator
) -> tuple[DenseTensor, PinnedVariables]:
    """Random start system with a known exact solution.

    Raw Gaussian factors are drawn per term and converted to pinned
    form: modes ``k >= 2`` are divided by their leading coordinate
    (redrawn in the measure-zero event it is smaller than 1e-8 in
    magnitude) and the products are absorbed into mode 1.  The start
    tensor is the exact evaluation of the pinned parameterization, so
    the start residual vanishes by construction.

    Configurations whose equilibrated Jacobian condition number
    exceeds 3e5 are redrawn outright: the Davidenko velocity at such a
    point outruns any step the tracker is allowed to take, so the path
    would only burn its budget.  A start system constrains nothing
    about the target, so rejecting bad ones is free.
    """
    sys = _System(shape, r)
    data = np.empty(r * shape.segre_dim, dtype=np.complex128)
    while True:
        pos = 0
        for _ in range(r):
            lead = rng.standard_normal(shape.dims[0])
            scale = 1.0
            tails = []
            for n in shape.dims[1:]:
                g = rng.standard_normal(n)
                while abs(g[0]) < _PIN_GUARD:
                    g = rng.standard_normal(n)
                scale *= g[0]
                tails.append(g[1:] / g[0])
            data[pos : pos + shape.dims[0]] = lead * scale
            pos += shape.dims[0]
            for tail in tails:
                data[pos : pos + tail.size] = tail
                pos += tail.size
        values, jac = sys.eval_jac(data[None, :])
        col = np.abs(jac[0]).max(axis=0)
        col[col == 0.0] = 1.0
        if np.linalg.cond(jac[0] / col[None, :]) <= _START_COND_MAX:
            break
    x = PinnedVariables(shape, r, data)
    return DenseTensor(shape, values[0].real), x


def residual(x: PinnedVariables, target: DenseTensor) -> np.ndarray:
    """vec(target) minus the evaluation of the pinned CPD (complex, length Pi)."""
    if target.shape != x.shape:
        raise ValueError("target shape does not match the variables")
    sys = _System(x.shape, x.r)
    return target.values - sys.evaluate(x.data[None, :])[0]


def jacobian(x: PinnedVariables) -> np.ndarray:
    """Derivative of the evaluation (= of -residual) w.r.t. the variables.

    Complex Pi x Pi matrix; columns ordered term-major, then mode-major
    within each term.
    """
    sys = _System(x.shape, x.r)
    _, jac = sys.eval_jac(x.data[None, :])
    return jac[0].copy()


def track(
    start_tensor: DenseTensor,
    start_solution: PinnedVariables,
    target: DenseTensor,
    cfg: TrackerConfig | None = None,
    rng: np.random.Generator | None = None,
) -> TrackResult:
    """Track the start solution to the target system (single path)."""
    cfg = cfg or TrackerConfig()
    if rng is None:
        raise ValueError("an rng is required to draw the deformation phase")
    gamma = np.exp(2j * math.pi * rng.uniform())
    return track_block(
        start_tensor.values[None, :],
        start_solution.data[None, :],
        target.values[None, :],
        np.array([gamma]),
        x_meta=(start_solution.shape, start_solution.r),
        cfg=cfg,
    )[0]


def track_block(
    f0: np.ndarray,
    x0: np.ndarray,
    f1: np.ndarray,
    gamma: np.ndarray,
    x_meta: tuple[Shape, int],
    cfg: TrackerConfig,
) -> list[TrackResult]:
    """Track a block of paths given raw arrays (vectorized engine)."""
    shape, r = x_meta
    sys = _System(shape, r)
    code, x, steps, final_res = _track_block(
        sys,
        np.asarray(x0, dtype=np.complex128),
        np.asarray(f0, dtype=np.complex128),
        np.asarray(f1, dtype=np.complex128),
        np.asarray(gamma, dtype=np.complex128),
        cfg,
    )
    out = []
    for i in range(x.shape[0]):
        status = _STATUS_OF_CODE[int(code[i])]
        sol = PinnedVariables(shape, r, x[i]) if status is TrackStatus.CONVERGED else None
        out.append(TrackResult(status, sol, int(steps[i]), float(final_res[i])))
    return out


def classify_real(x: PinnedVariables, tol: float) -> bool:
    """True iff the Euclidean norm of all imaginary parts is below tol."""
    return x.imag_norm() < tol


def to_cpd(x: PinnedVariables, shape: Shape) -> CPDecomposition:
    """Real CP decomposition from a real-classified solution.

    Imaginary parts are dropped, pinned leading ones restored, factors
    normalized to unit length with magnitudes collected into the scale
    and signs pushed into the first factor.
    """
    sigma = shape.segre_dim
    terms = []
    for i in range(x.r):
        chunk = x.data.real[i * sigma : (i + 1) * sigma]
        vecs = [chunk[: shape.dims[0]]]
        pos = shape.dims[0]
        for n in shape.dims[1:]:
            vecs.append(np.concatenate([[1.0], chunk[pos : pos + n - 1]]))
            pos += n - 1
        scale = 1.0
        factors = []
        for v in vecs:
            nrm = float(np.linalg.norm(v))
            if nrm == 0.0:
                raise ValueError("degenerate solution: zero factor after projection")
            scale *= nrm
            factors.append(v / nrm)
        terms.append(Rank1Term(scale, tuple(factors)))
    return CPDecomposition(shape, tuple(terms))
