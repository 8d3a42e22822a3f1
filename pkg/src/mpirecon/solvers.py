"""Row-action and proximal-gradient solvers with shared stopping logic."""

from __future__ import annotations

import time
from dataclasses import dataclass, field

import numpy as np
from numba import njit

from .prox import ThresholdRule, nng_penalty_eval, project_nonneg, prox_composed
from .wavelet import UdwtOperator

__all__ = [
    "SystemMatrix",
    "SolverConfig",
    "ReconReport",
    "SolverError",
    "PowerIterationError",
    "kaczmarz_sweep",
    "landweber_step",
    "kaczmarz_reconstruct",
    "ska_reconstruct",
    "fista_reconstruct",
    "regkz_reconstruct",
    "power_iteration_opnorm",
    "stop_check",
    "rel_change",
    "composite_objective",
]


class SolverError(RuntimeError):
    """Raised when a solver precondition is violated."""


class PowerIterationError(SolverError):
    """Power iteration did not converge; carries the best estimate."""

    def __init__(self, message: str, best_estimate: float):
        super().__init__(message)
        self.best_estimate = best_estimate


@dataclass
class SystemMatrix:
    """Dense complex measurement operator with per-row metadata."""

    entries: np.ndarray
    grid_dims: tuple[int, ...]
    row_norms: np.ndarray
    row_snr: np.ndarray | None = None
    row_freq_hz: np.ndarray | None = None

    @classmethod
    def from_entries(cls, entries, grid_dims, row_snr=None, row_freq_hz=None):
        entries = np.ascontiguousarray(entries, dtype=np.complex128)
        if entries.ndim != 2 or entries.shape[0] < 1:
            raise ValueError("entries must be a non-empty 2D array")
        grid_dims = tuple(int(v) for v in np.atleast_1d(grid_dims))
        if int(np.prod(grid_dims)) != entries.shape[1]:
            raise ValueError("grid_dims product must equal the column count")
        norms = np.linalg.norm(entries, axis=1)
        if np.any(norms == 0):
            raise ValueError("system matrix contains zero-norm rows")
        return cls(
            entries=entries,
            grid_dims=grid_dims,
            row_norms=norms,
            row_snr=None if row_snr is None else np.asarray(row_snr, dtype=float),
            row_freq_hz=None if row_freq_hz is None else np.asarray(row_freq_hz, dtype=float),
        )

    @property
    def shape(self) -> tuple[int, int]:
        return self.entries.shape

    @property
    def is_normalized(self) -> bool:
        return bool(np.max(np.abs(self.row_norms - 1.0)) <= 1e-8)


@dataclass
class SolverConfig:
    """Shared solver settings (regularization, stopping, row order)."""

    lam: float = 0.0
    rule: ThresholdRule = field(default_factory=lambda: ThresholdRule("none"))
    max_epochs: int = 3000
    eps_r: float = 1e-5
    gamma: float | None = None  # largest eigenvalue of A*A, for FISTA
    rho: float = 0.0  # Tikhonov weight, regularized Kaczmarz only
    row_order: str = "cyclic"  # 'cyclic' or 'shuffled'
    seed: int = 0
    enforce_nonneg: bool = True
    threshold_approx: bool = False
    step_rule: str = "lipschitz"  # 'lipschitz' (1/rho_max) or 'sqrt' (1/sqrt(rho_max))
    track_objective: bool = False

    def __post_init__(self):
        if self.eps_r <= 0:
            raise ValueError("eps_r must be > 0")
        if self.max_epochs < 1:
            raise ValueError("max_epochs must be >= 1")
        if self.lam < 0 or self.rho < 0:
            raise ValueError("lam and rho must be >= 0")
        if self.row_order not in ("cyclic", "shuffled"):
            raise ValueError("row_order must be 'cyclic' or 'shuffled'")
        if self.step_rule not in ("lipschitz", "sqrt"):
            raise ValueError("step_rule must be 'lipschitz' or 'sqrt'")


@dataclass
class ReconReport:
    """Solver output: iterate plus per-epoch convergence history."""

    x: np.ndarray
    epochs_run: int
    rel_change_history: np.ndarray
    residual_history: np.ndarray
    time_history: np.ndarray
    wall_time_s: float
    stopped_by: str  # 'tolerance' or 'max_epochs'
    objective_history: np.ndarray | None = None


@njit(cache=True)
def _sweep_kernel(A, b, x, order, inv_sq):  # pragma: no cover - compiled
    n = A.shape[1]
    for t in range(order.shape[0]):
        i = order[t]
        r = b[i]
        for j in range(n):
            r -= A[i, j] * x[j]
        r *= inv_sq[i]
        for j in range(n):
            x[j] += r * np.conj(A[i, j])


@njit(cache=True)
def _regkz_kernel(A, b, x, v, order, sq, rho, sqrt_rho):  # pragma: no cover
    n = A.shape[1]
    for t in range(order.shape[0]):
        i = order[t]
        r = b[i] - sqrt_rho * v[i]
        for j in range(n):
            r -= A[i, j] * x[j]
        beta = r / (sq[i] + rho)
        for j in range(n):
            x[j] += beta * np.conj(A[i, j])
        v[i] += beta * sqrt_rho


def _row_order(m: int, cfg: SolverConfig, rng: np.random.Generator | None):
    if cfg.row_order == "cyclic":
        return np.arange(m, dtype=np.int64)
    return rng.permutation(m).astype(np.int64)


def kaczmarz_sweep(A: SystemMatrix, b: np.ndarray, x: np.ndarray,
                   order: np.ndarray | None = None) -> np.ndarray:
    """One full sweep of Kaczmarz projections over all rows (one epoch)."""
    b = np.asarray(b, dtype=np.complex128)
    if b.shape[0] != A.shape[0] or np.asarray(x).shape[0] != A.shape[1]:
        raise ValueError("dimension mismatch between A, b and x")
    out = np.array(x, dtype=np.complex128, copy=True)
    if order is None:
        order = np.arange(A.shape[0], dtype=np.int64)
    _sweep_kernel(A.entries, b, out, np.asarray(order, dtype=np.int64),
                  1.0 / A.row_norms**2)
    return out


def landweber_step(A: SystemMatrix, b: np.ndarray, x: np.ndarray,
                   gamma: float) -> np.ndarray:
    """One gradient-descent step on 0.5 ||Ax - b||^2 with step gamma."""
    if gamma <= 0:
        raise ValueError("gamma must be > 0")
    x = np.asarray(x, dtype=np.complex128)
    resid = A.entries @ x - np.asarray(b, dtype=np.complex128)
    return x - gamma * (A.entries.conj().T @ resid)


def rel_change(x_prev: np.ndarray, x_next: np.ndarray) -> float:
    """Relative change ||x_prev - x_next|| / ||x_prev||.

    Zero-previous convention: returns ||x_next|| when x_prev vanishes, so an
    all-zero fixed point reports 0.
    """
    n_prev = float(np.linalg.norm(x_prev))
    if n_prev == 0.0:
        return float(np.linalg.norm(x_next))
    return float(np.linalg.norm(np.asarray(x_prev) - np.asarray(x_next)) / n_prev)


def stop_check(x_prev: np.ndarray, x_next: np.ndarray, eps_r: float) -> bool:
    """True iff the relative change between consecutive iterates is < eps_r."""
    return rel_change(x_prev, x_next) < eps_r


def composite_objective(A: SystemMatrix, b: np.ndarray, x: np.ndarray,
                        phi: UdwtOperator, rule: ThresholdRule,
                        threshold_approx: bool = False) -> float:
    """Evaluate 0.5 ||Ax - b||^2 + penalty(Phi x) for the active rule."""
    x = np.asarray(x)
    data = 0.5 * float(np.linalg.norm(A.entries @ x.ravel() - b) ** 2)
    if rule.kind == "none" or rule.lam == 0.0:
        return data
    p = phi.forward(x.reshape(phi.dims))
    bands = []
    for level in p.bands:
        bands.extend(level)
    if threshold_approx:
        bands.append(p.approx)
    if rule.kind == "soft":
        pen = rule.lam * sum(float(np.sum(np.abs(bd))) for bd in bands)
    elif rule.kind == "nng":
        pen = sum(nng_penalty_eval(bd, rule.lam) for bd in bands)
    else:
        raise ValueError(f"no objective defined for rule {rule.kind!r}")
    return data + pen


class _History:
    def __init__(self, track_objective: bool):
        self.rel = []
        self.res = []
        self.sec = []
        self.obj = [] if track_objective else None
        self.t0 = time.perf_counter()

    def record(self, eps, resid, obj=None):
        self.rel.append(eps)
        self.res.append(resid)
        self.sec.append(time.perf_counter() - self.t0)
        if self.obj is not None:
            self.obj.append(obj)

    def report(self, x, stopped_by):
        return ReconReport(
            x=x,
            epochs_run=len(self.rel),
            rel_change_history=np.asarray(self.rel),
            residual_history=np.asarray(self.res),
            time_history=np.asarray(self.sec),
            wall_time_s=time.perf_counter() - self.t0,
            stopped_by=stopped_by,
            objective_history=None if self.obj is None else np.asarray(self.obj),
        )


def _residual(A: SystemMatrix, b: np.ndarray, x: np.ndarray) -> float:
    return float(np.linalg.norm(A.entries @ x - b))


def kaczmarz_reconstruct(A: SystemMatrix, b: np.ndarray, cfg: SolverConfig,
                         on_epoch=None) -> ReconReport:
    """Plain (optionally nonnegativity-projected) Kaczmarz iteration."""
    b = np.asarray(b, dtype=np.complex128)
    m, n = A.shape
    rng = np.random.default_rng(cfg.seed) if cfg.row_order == "shuffled" else None
    inv_sq = 1.0 / A.row_norms**2
    x = np.zeros(n, dtype=np.complex128)
    hist = _History(False)
    stopped = "max_epochs"
    for epoch in range(1, cfg.max_epochs + 1):
        x_prev = x.copy()
        _sweep_kernel(A.entries, b, x, _row_order(m, cfg, rng), inv_sq)
        if cfg.enforce_nonneg:
            x = project_nonneg(x).astype(np.complex128)
        eps = rel_change(x_prev, x)
        hist.record(eps, _residual(A, b, x))
        if on_epoch is not None:
            on_epoch(epoch, x)
        if eps < cfg.eps_r:
            stopped = "tolerance"
            break
    out = project_nonneg(x) if cfg.enforce_nonneg else x
    return hist.report(out.reshape(A.grid_dims), stopped)


def ska_reconstruct(A: SystemMatrix, b: np.ndarray, cfg: SolverConfig,
                    phi: UdwtOperator, on_epoch=None) -> ReconReport:
    """Sparse Kaczmarz: per epoch one full row sweep, nonnegativity
    projection, then the frame-composed shrinkage with threshold ``cfg.lam``.
    Starts from x = 0 and stops on the relative-change criterion."""
    if not A.is_normalized:
        raise SolverError("SKA requires a row-normalized system matrix")
    if tuple(phi.dims) != tuple(A.grid_dims):
        raise SolverError("wavelet operator dims do not match the grid")
    b = np.asarray(b, dtype=np.complex128)
    m, n = A.shape
    rng = np.random.default_rng(cfg.seed) if cfg.row_order == "shuffled" else None
    inv_sq = 1.0 / A.row_norms**2
    rule = ThresholdRule(cfg.rule.kind, cfg.lam)
    x = np.zeros(n, dtype=np.complex128)
    hist = _History(cfg.track_objective)
    stopped = "max_epochs"
    for epoch in range(1, cfg.max_epochs + 1):
        x_prev = x.copy()
        _sweep_kernel(A.entries, b, x, _row_order(m, cfg, rng), inv_sq)
        if cfg.enforce_nonneg:
            x = project_nonneg(x)
        x = prox_composed(x, phi, rule, cfg.threshold_approx).astype(np.complex128)
        eps = rel_change(x_prev, x)
        obj = None
        if cfg.track_objective:
            obj = composite_objective(A, b, x.real, phi, rule, cfg.threshold_approx)
        hist.record(eps, _residual(A, b, x), obj)
        if on_epoch is not None:
            on_epoch(epoch, x)
        if eps < cfg.eps_r:
            stopped = "tolerance"
            break
    out = project_nonneg(x) if cfg.enforce_nonneg else x
    return hist.report(out.reshape(A.grid_dims), stopped)


def fista_reconstruct(A: SystemMatrix, b: np.ndarray, cfg: SolverConfig,
                      phi: UdwtOperator, on_epoch=None) -> ReconReport:
    """FISTA with Nesterov momentum, nonnegativity projection and the
    frame-composed shrinkage; one iteration counts as one epoch."""
    if cfg.gamma is None or cfg.gamma <= 0:
        raise SolverError("FISTA needs cfg.gamma (largest eigenvalue of A*A)")
    if tuple(phi.dims) != tuple(A.grid_dims):
        raise SolverError("wavelet operator dims do not match the grid")
    b = np.asarray(b, dtype=np.complex128)
    n = A.shape[1]
    step = 1.0 / cfg.gamma if cfg.step_rule == "lipschitz" else 1.0 / np.sqrt(cfg.gamma)
    rule = ThresholdRule(cfg.rule.kind, cfg.lam * step)
    Ah = A.entries.conj().T

    x_prev = np.zeros(n, dtype=np.complex128)
    z = x_prev.copy()
    t_prev = 1.0
    hist = _History(cfg.track_objective)
    stopped = "max_epochs"
    for epoch in range(1, cfg.max_epochs + 1):
        y = z - step * (Ah @ (A.entries @ z - b))
        if cfg.enforce_nonneg:
            y = project_nonneg(y)
        x = prox_composed(y, phi, rule, cfg.threshold_approx).astype(np.complex128)
        t = 0.5 * (1.0 + np.sqrt(4.0 * t_prev**2 + 1.0))
        z = x + ((t_prev - 1.0) / t) * (x - x_prev)
        eps = rel_change(x_prev, x)
        obj = None
        if cfg.track_objective:
            # objective uses the solved problem's weight lam (prox used lam*step)
            obj = composite_objective(A, b, x.real, phi,
                                      ThresholdRule(cfg.rule.kind, cfg.lam),
                                      cfg.threshold_approx)
        hist.record(eps, _residual(A, b, x), obj)
        if on_epoch is not None:
            on_epoch(epoch, x)
        x_prev, t_prev = x, t
        if eps < cfg.eps_r:
            stopped = "tolerance"
            break
    out = project_nonneg(x_prev) if cfg.enforce_nonneg else x_prev
    return hist.report(out.reshape(A.grid_dims), stopped)


def regkz_reconstruct(A: SystemMatrix, b: np.ndarray, cfg: SolverConfig,
                      on_epoch=None) -> ReconReport:
    """Tikhonov-regularized Kaczmarz on the augmented system.

    Maintains the auxiliary residual variable v and updates
    ``beta = (b_i - <a_i, x> - sqrt(rho) v_i) / (||a_i||^2 + rho)``,
    ``x += beta a_i*``, ``v_i += beta sqrt(rho)``; projects onto the
    nonnegative reals once per epoch.
    """
    b = np.asarray(b, dtype=np.complex128)
    m, n = A.shape
    rng = np.random.default_rng(cfg.seed) if cfg.row_order == "shuffled" else None
    sq = A.row_norms**2
    x = np.zeros(n, dtype=np.complex128)
    v = np.zeros(m, dtype=np.complex128)
    hist = _History(False)
    stopped = "max_epochs"
    for epoch in range(1, cfg.max_epochs + 1):
        x_prev = x.copy()
        _regkz_kernel(A.entries, b, x, v, _row_order(m, cfg, rng), sq,
                      cfg.rho, np.sqrt(cfg.rho))
        if cfg.enforce_nonneg:
            x = project_nonneg(x).astype(np.complex128)
        eps = rel_change(x_prev, x)
        hist.record(eps, _residual(A, b, x))
        if on_epoch is not None:
            on_epoch(epoch, x)
        if eps < cfg.eps_r:
            stopped = "tolerance"
            break
    out = project_nonneg(x) if cfg.enforce_nonneg else x
    return hist.report(out.reshape(A.grid_dims), stopped)


def power_iteration_opnorm(A, tol: float = 1e-10, max_it: int = 5000,
                           seed: int = 0) -> float:
    """Largest eigenvalue of A*A by power iteration on the Gram operator."""
    entries = getattr(A, "entries", np.asarray(A))
    rng = np.random.default_rng(seed)
    n = entries.shape[1]
    v = rng.standard_normal(n) + 1j * rng.standard_normal(n)
    v /= np.linalg.norm(v)
    est = 0.0
    for _ in range(max_it):
        w = entries.conj().T @ (entries @ v)
        new = float(np.real(np.vdot(v, w)))
        nw = np.linalg.norm(w)
        if nw == 0.0:
            return 0.0
        v = w / nw
        if abs(new - est) <= tol * max(abs(new), 1e-300):
            return new
        est = new
    raise PowerIterationError(
        f"power iteration did not converge in {max_it} iterations", est
    )
