"""Moment-matching reduction of symmetric RC systems (block Arnoldi).

Reduces C x' = -G x + B u, y = L^T x by a one-sided congruence projection
onto the block Krylov space of (G^-1 C, G^-1 B) expanded at s = 0.  The
projection keeps G/C symmetric (semi)definite, so reduced thermal or RC
networks stay passive, and matches the leading block moments — the DC
gain in particular.
"""

from __future__ import annotations

import io
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np
import scipy.sparse
import scipy.sparse.linalg

from .errors import ConfigError, IOError_, SolverError

DEFLATION_TOL = 1e-12


def _as_diag_vector(c, n: int) -> np.ndarray:
    """Accept a diagonal capacitance as vector, dense, or sparse matrix."""
    if scipy.sparse.issparse(c):
        dense = c.toarray()
    else:
        dense = np.asarray(c, dtype=float)
    if dense.ndim == 1:
        vec = dense
    elif dense.ndim == 2:
        if dense.shape != (n, n):
            raise ConfigError("capacitance matrix shape mismatch")
        if np.any(dense != np.diag(np.diag(dense))):
            raise ConfigError("capacitance matrix must be diagonal")
        vec = np.diag(dense).copy()
    else:
        raise ConfigError("capacitance must be a vector or diagonal matrix")
    if vec.size != n:
        raise ConfigError("capacitance size does not match system order")
    if np.any(vec < 0):
        raise ConfigError("capacitance entries must be >= 0")
    return vec


def _as_dense_map(mat, n: int, what: str) -> np.ndarray:
    if scipy.sparse.issparse(mat):
        out = mat.toarray().astype(float)
    else:
        out = np.atleast_2d(np.asarray(mat, dtype=float))
        if out.shape[0] == 1 and n != 1:
            out = out.T
    if out.shape[0] != n:
        raise ConfigError(f"{what} map must have {n} rows, got {out.shape[0]}")
    return out


@dataclass(frozen=True)
class StateSpaceRC:
    """First-order system C x' = -G x + B u, y = L^T x with diagonal C."""

    g: scipy.sparse.csr_matrix    # (n, n) symmetric positive definite
    c: np.ndarray                 # (n,) diagonal capacitance
    b: np.ndarray                 # (n, m) dense input map
    l: np.ndarray                 # (n, p) dense output map
    input_names: tuple = ()
    output_names: tuple = ()

    def __post_init__(self):
        g = self.g if scipy.sparse.issparse(self.g) else scipy.sparse.csr_matrix(
            np.atleast_2d(np.asarray(self.g, dtype=float)))
        g = g.tocsr()
        n = g.shape[0]
        if g.shape != (n, n):
            raise ConfigError("conductance matrix must be square")
        asym = abs(g - g.T)
        if asym.nnz and asym.max() > 1e-9 * abs(g).max():
            raise ConfigError("conductance matrix must be symmetric")
        object.__setattr__(self, "g", g)
        object.__setattr__(self, "c", _as_diag_vector(self.c, n))
        object.__setattr__(self, "b", _as_dense_map(self.b, n, "input"))
        object.__setattr__(self, "l", _as_dense_map(self.l, n, "output"))
        if not self.input_names:
            object.__setattr__(self, "input_names",
                               tuple(f"in{k}" for k in range(self.n_inputs)))
        if not self.output_names:
            object.__setattr__(self, "output_names",
                               tuple(f"out{k}" for k in range(self.n_outputs)))
        if len(self.input_names) != self.n_inputs:
            raise ConfigError("one name per input required")
        if len(self.output_names) != self.n_outputs:
            raise ConfigError("one name per output required")

    @property
    def order(self) -> int:
        return self.g.shape[0]

    @property
    def n_inputs(self) -> int:
        return self.b.shape[1]

    @property
    def n_outputs(self) -> int:
        return self.l.shape[1]


@dataclass(frozen=True)
class ReducedModel:
    """Congruence-projected model with orthonormal basis V."""

    v: np.ndarray                 # (n, q) orthonormal columns
    g_hat: np.ndarray             # (q, q) symmetric positive definite
    c_hat: np.ndarray             # (q, q) symmetric positive semidefinite
    b_hat: np.ndarray             # (q, m)
    l_hat: np.ndarray             # (q, p)
    order: int
    requested_order: int
    input_names: tuple = ()
    output_names: tuple = ()

    @property
    def breakdown(self) -> bool:
        """True when deflation exhausted the Krylov space early."""
        return self.order < self.requested_order

    @property
    def n_inputs(self) -> int:
        return self.b_hat.shape[1]

    @property
    def n_outputs(self) -> int:
        return self.l_hat.shape[1]


def _factor_g(g: scipy.sparse.csr_matrix):
    try:
        lu = scipy.sparse.linalg.splu(g.tocsc())
    except RuntimeError as exc:
        raise ConfigError("singular conductance matrix") from exc
    # splu may succeed on a numerically singular matrix; probe it.
    probe = lu.solve(np.ones(g.shape[0]))
    if not np.all(np.isfinite(probe)):
        raise ConfigError("singular conductance matrix")
    return lu


def reduce_arnoldi(sys: StateSpaceRC, order: int) -> ReducedModel:
    """Block-Arnoldi congruence reduction to (at most) the given order.

    Deflation drops directions whose norm after orthogonalization falls
    below 1e-12 of the incoming block norm.  If the Krylov space is
    exhausted before reaching the requested order, the achieved order is
    returned with the breakdown flag set.
    """
    n, m = sys.order, sys.n_inputs
    if not m <= order <= n:
        raise ConfigError(f"order must satisfy {m} <= q <= {n}")
    lu = _factor_g(sys.g)

    basis: list[np.ndarray] = []

    def orthonormalize(block: np.ndarray) -> np.ndarray:
        """Two-pass MGS of block columns against basis and each other."""
        scale = np.linalg.norm(block)
        kept = []
        for col in block.T:
            w = col.copy()
            for _ in range(2):
                for v in basis:
                    w -= (v @ w) * v
                for v in kept:
                    w -= (v @ w) * v
            nrm = np.linalg.norm(w)
            if nrm > DEFLATION_TOL * max(scale, 1.0):
                kept.append(w / nrm)
        return np.array(kept).T if kept else np.empty((n, 0))

    block = lu.solve(sys.b)
    while len(basis) < order:
        fresh = orthonormalize(block)
        if fresh.size == 0:
            break                         # Krylov space exhausted
        for col in fresh.T:
            basis.append(col)
            if len(basis) >= order:
                break
        block = lu.solve(sys.c[:, None] * fresh)

    v = np.column_stack(basis)
    q = v.shape[1]
    g_hat = v.T @ (sys.g @ v)
    g_hat = 0.5 * (g_hat + g_hat.T)
    c_hat = (v.T * sys.c) @ v
    c_hat = 0.5 * (c_hat + c_hat.T)
    return ReducedModel(v, g_hat, c_hat, v.T @ sys.b, v.T @ sys.l,
                        q, order, sys.input_names, sys.output_names)


def dc_gain(model) -> np.ndarray:
    """L^T G^-1 B (p x m), for either a full or a reduced model."""
    if isinstance(model, StateSpaceRC):
        lu = _factor_g(model.g)
        return model.l.T @ lu.solve(model.b)
    if isinstance(model, ReducedModel):
        try:
            x = np.linalg.solve(model.g_hat, model.b_hat)
        except np.linalg.LinAlgError as exc:
            raise ConfigError("singular reduced conductance matrix") from exc
        return model.l_hat.T @ x
    raise ConfigError(f"dc_gain: unsupported model type {type(model).__name__}")


@dataclass(frozen=True)
class Stimulus:
    """Time-domain drive for validate_reduction.

    kind "step": u(t) = amplitudes for t > 0.  kind "sine": one run per
    frequency with u_i(t) = amplitudes_i * sin(2 pi f t).
    """

    kind: str
    duration: float
    dt: float
    amplitudes: Sequence[float] | None = None
    frequencies: Sequence[float] = ()

    def __post_init__(self):
        if self.kind not in ("step", "sine"):
            raise ConfigError("stimulus kind must be 'step' or 'sine'")
        if self.dt <= 0 or self.duration <= 0:
            raise ConfigError("stimulus dt and duration must be > 0")
        if self.kind == "sine" and not self.frequencies:
            raise ConfigError("sine stimulus needs at least one frequency")

    def input_matrix(self, m: int, times: np.ndarray, frequency: float | None):
        amp = (np.ones(m) if self.amplitudes is None
               else np.asarray(self.amplitudes, dtype=float))
        if amp.shape != (m,):
            raise ConfigError(f"stimulus needs {m} amplitudes")
        if self.kind == "step":
            u = np.ones_like(times)
        else:
            u = np.sin(2 * np.pi * frequency * times)
        return amp[None, :] * u[:, None]     # (nt, m)


def _simulate(g, c_vec_or_mat, b, l, u_of_t: np.ndarray, dt: float):
    """Backward-Euler run; one factorization, outputs (nt, p)."""
    sparse = scipy.sparse.issparse(g)
    n = g.shape[0]
    if sparse:
        c_mat = scipy.sparse.diags(c_vec_or_mat)
        lhs = scipy.sparse.linalg.splu((c_mat / dt + g).tocsc())
        solve = lhs.solve
        c_apply = lambda x: c_vec_or_mat * x
    else:
        c_mat = np.asarray(c_vec_or_mat)
        import scipy.linalg as sla

        lhs = sla.lu_factor(c_mat / dt + g)
        solve = lambda r: sla.lu_solve(lhs, r)
        c_apply = lambda x: c_mat @ x
    x = np.zeros(n)
    nt = u_of_t.shape[0]
    y = np.empty((nt, l.shape[1]))
    y[0] = l.T @ x
    for s in range(1, nt):
        x = solve(c_apply(x) / dt + b @ u_of_t[s])
        y[s] = l.T @ x
    return y


def transfer_function(model, s_values) -> np.ndarray:
    """H(s) = L^T (G + s C)^-1 B sampled at complex s; (ns, p, m)."""
    s_values = np.asarray(s_values, dtype=complex)
    if isinstance(model, StateSpaceRC):
        out = np.empty((s_values.size, model.n_outputs, model.n_inputs), complex)
        c_mat = scipy.sparse.diags(model.c)
        for k, s in enumerate(s_values):
            lu = scipy.sparse.linalg.splu((model.g + s * c_mat).tocsc())
            out[k] = model.l.T @ lu.solve(model.b.astype(complex))
        return out
    out = np.empty((s_values.size, model.n_outputs, model.n_inputs), complex)
    for k, s in enumerate(s_values):
        x = np.linalg.solve(model.g_hat + s * model.c_hat,
                            model.b_hat.astype(complex))
        out[k] = model.l_hat.T @ x
    return out


def validate_reduction(full: StateSpaceRC, red: ReducedModel,
                       stimulus: Stimulus,
                       freq_grid=None) -> dict:
    """Compare reduced vs full outputs; reports errors, never raises.

    Relative errors are normalized by the peak full-model output magnitude
    per output channel over the horizon.
    """
    if red.n_inputs != full.n_inputs or red.n_outputs != full.n_outputs:
        raise ConfigError("port counts of full and reduced model differ")
    nt = int(round(stimulus.duration / stimulus.dt)) + 1
    times = np.arange(nt) * stimulus.dt
    runs = (stimulus.frequencies if stimulus.kind == "sine" else (None,))

    max_err = 0.0
    sq_sum, sq_count = 0.0, 0
    for f in runs:
        u = stimulus.input_matrix(full.n_inputs, times, f)
        y_full = _simulate(full.g, full.c, full.b, full.l, u, stimulus.dt)
        y_red = _simulate(red.g_hat, red.c_hat, red.b_hat, red.l_hat,
                          u, stimulus.dt)
        scale = np.abs(y_full).max(axis=0)
        scale[scale == 0] = 1.0
        rel = np.abs(y_red - y_full) / scale[None, :]
        max_err = max(max_err, float(rel.max()))
        sq_sum += float((rel ** 2).sum())
        sq_count += rel.size

    report = {
        "max_relative_error": max_err,
        "rms_relative_error": float(np.sqrt(sq_sum / sq_count)),
        "order": red.order,
        "breakdown": red.breakdown,
    }

    if freq_grid is None:
        f_lo = 1.0 / (2 * np.pi * stimulus.duration)
        f_hi = 1.0 / (20 * stimulus.dt)
        freq_grid = np.geomspace(f_lo, max(f_hi, 10 * f_lo), 9)
    s_values = 2j * np.pi * np.asarray(freq_grid, dtype=float)
    h_full = transfer_function(full, s_values)
    h_red = transfer_function(red, s_values)
    h_scale = np.abs(h_full).max()
    report["freq_grid_hz"] = np.asarray(freq_grid, dtype=float)
    report["freq_response_error"] = (
        np.abs(h_red - h_full).max(axis=(1, 2)) / (h_scale if h_scale else 1.0))
    report["max_freq_response_error"] = float(report["freq_response_error"].max())
    return report


# ----------------------------------------------------------------------
# Table fitting


@dataclass(frozen=True)
class FitModel:
    """Fitted 1-d behavioral curve; evaluation clamps outside the range."""

    kind: str                     # "pwl-log" | "rational"
    x_range: tuple
    knots_logx: np.ndarray = field(default=None)
    knots_y: np.ndarray = field(default=None)
    num_coeffs: np.ndarray = field(default=None)
    den_coeffs: np.ndarray = field(default=None)   # denominator = 1 + sum b_j x^j
    x_scale: float = 1.0

    def evaluate(self, x) -> np.ndarray:
        x = np.clip(np.asarray(x, dtype=float), *self.x_range)
        if self.kind == "pwl-log":
            return np.interp(np.log(x), self.knots_logx, self.knots_y)
        xs = x / self.x_scale
        num = np.polyval(self.num_coeffs[::-1], xs)
        den = 1.0 + xs * np.polyval(self.den_coeffs[::-1], xs)
        return num / den

    __call__ = evaluate


def fit_table(x, y, kind: str = "pwl-log",
              num_degree: int = 2, den_degree: int = 2) -> FitModel:
    """Fit sampled (x, y) data for behavioral evaluation.

    "pwl-log" interpolates exactly, piecewise-linear in log x (x > 0
    required).  "rational" least-squares fits y ~ P(x)/ (1 + x Q(x)) via
    the standard linearization.  x must be strictly increasing.
    """
    x = np.asarray(x, dtype=float)
    y = np.asarray(y, dtype=float)
    if x.ndim != 1 or x.shape != y.shape or x.size < 2:
        raise ConfigError("fit needs >= 2 (x, y) samples of equal length")
    if np.any(np.diff(x) <= 0):
        raise ConfigError("sample x values must be strictly increasing "
                          "(duplicates not allowed)")
    rng = (float(x[0]), float(x[-1]))
    if kind == "pwl-log":
        if x[0] <= 0:
            raise ConfigError("pwl-log fit needs x > 0")
        return FitModel("pwl-log", rng, knots_logx=np.log(x), knots_y=y.copy())
    if kind != "rational":
        raise ConfigError(f"unknown fit kind {kind!r}")
    scale = float(x[-1])
    xs = x / scale
    cols = [xs ** i for i in range(num_degree + 1)]
    cols += [-y * xs ** j for j in range(1, den_degree + 1)]
    a = np.column_stack(cols)
    coef, *_ = np.linalg.lstsq(a, y, rcond=None)
    num = coef[: num_degree + 1]
    den = coef[num_degree + 1:]
    model = FitModel("rational", rng, num_coeffs=num, den_coeffs=den,
                     x_scale=scale)
    if not np.all(np.isfinite(model.evaluate(x))):
        raise SolverError("rational fit produced poles inside the data range")
    return model


# ----------------------------------------------------------------------
# Text serialization (dense, full precision, row-major)

_FMT = "%.17e"


def _write_matrix(out: io.TextIOBase, name: str, mat: np.ndarray) -> None:
    mat = np.atleast_2d(mat)
    out.write(f"{name} {mat.shape[0]} {mat.shape[1]}\n")
    for row in mat:
        out.write(" ".join(_FMT % v for v in row) + "\n")


def save_reduced(model: ReducedModel, path) -> None:
    """Write the reduced matrices as structured text (basis V excluded)."""
    with open(path, "w", encoding="ascii") as out:
        out.write("reduced-rc-model v1\n")
        out.write(f"order {model.order}\n")
        out.write("inputs " + " ".join(model.input_names) + "\n")
        out.write("outputs " + " ".join(model.output_names) + "\n")
        _write_matrix(out, "G", model.g_hat)
        _write_matrix(out, "C", model.c_hat)
        _write_matrix(out, "B", model.b_hat)
        _write_matrix(out, "L", model.l_hat)


def _read_matrix(lines, cursor: int, name: str):
    header = lines[cursor].split()
    if len(header) != 3 or header[0] != name:
        raise ConfigError(f"reduced model: expected '{name} rows cols' "
                          f"at line {cursor + 1}")
    rows, cols = int(header[1]), int(header[2])
    block = lines[cursor + 1: cursor + 1 + rows]
    if len(block) != rows:
        raise ConfigError(f"reduced model: truncated {name} matrix")
    mat = np.array([[float(tok) for tok in line.split()] for line in block])
    if mat.shape != (rows, cols):
        raise ConfigError(f"reduced model: {name} matrix shape mismatch")
    return mat, cursor + 1 + rows


def load_reduced(path) -> ReducedModel:
    """Read a model written by save_reduced."""
    with open(path, encoding="ascii") as fh:
        lines = [ln.rstrip("\n") for ln in fh if ln.strip()]
    if not lines or lines[0] != "reduced-rc-model v1":
        raise ConfigError(f"{path}: not a reduced-rc-model v1 file")
    try:
        if not lines[1].startswith("order "):
            raise ConfigError(f"{path}: missing order line")
        order = int(lines[1].split()[1])
        input_names = tuple(lines[2].split()[1:])
        output_names = tuple(lines[3].split()[1:])
        g_hat, cur = _read_matrix(lines, 4, "G")
        c_hat, cur = _read_matrix(lines, cur, "C")
        b_hat, cur = _read_matrix(lines, cur, "B")
        l_hat, cur = _read_matrix(lines, cur, "L")
    except (IndexError, ValueError) as exc:
        raise IOError_(f"{path}: truncated or corrupt model file: {exc}") from exc
    if g_hat.shape != (order, order):
        raise ConfigError(f"{path}: order/matrix mismatch")
    v = np.zeros((order, 0))    # basis not stored; not needed for evaluation
    return ReducedModel(v, g_hat, c_hat, b_hat, l_hat, order, order,
                        input_names, output_names)
