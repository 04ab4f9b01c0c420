"""Truncated power series and the window-derivation engine for swing dynamics.

Each machine's rotor angle over a short window is represented as a sum of
polynomial terms in local time t. Term zero is the initial angle; term one
carries the initial speed plus the doubly integrated initial acceleration;
every later term double-integrates a damping correction of the previous term
together with the next Adomian polynomial of the coupling nonlinearity:

    x_0     = delta(0)
    x_1     = omega(0) t + II[A_0]
    x_{n+1} = -a II[d x_n / dt] + II[A_n],     n >= 1

where II is double integration from 0 and a = D/(2H). A_n is the nth
Adomian polynomial: the lambda^n coefficient of f applied to the
lambda-weighted term sum. The swing nonlinearity is a combination of
cosines of pairwise angle differences, so the lambda expansion is carried
exactly by a coupled sine/cosine recurrence over polynomial coefficients;
no symbolic algebra is involved, and with the default degree cap nothing
is ever truncated.

Everything here is pure and operates on immutable values; per-machine work
inside one lambda order is data-parallel (vectorized over the machine axis).
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from functools import cached_property, lru_cache

import numpy as np

from .errors import DivergenceError, ValidationError
from .netmodel import (PowerSystemCase, ReducedNetwork, augment_and_reduce,
                       initialized_case)


# ---------------------------------------------------------------------------
# Truncated polynomial arithmetic


class TruncatedSeries:
    """Polynomial in local time t truncated at a fixed maximum degree.

    Coefficients ascend: ``coeffs[k]`` multiplies t**k. Products truncate to
    the larger operand's degree bound, integration raises the bound,
    differentiation lowers it. Evaluation uses Horner's scheme, so the value
    at t = 0 is exactly ``coeffs[0]``.
    """

    __slots__ = ("coeffs",)

    def __init__(self, coeffs, max_degree: int | None = None):
        c = np.array(coeffs, dtype=float)
        if c.ndim != 1:
            raise ValidationError("series coefficients must be one-dimensional")
        if max_degree is not None:
            if max_degree < 0:
                raise ValidationError("max_degree must be >= 0")
            out = np.zeros(max_degree + 1)
            m = min(c.size, max_degree + 1)
            out[:m] = c[:m]
            c = out
        elif c.size == 0:
            c = np.zeros(1)
        c.setflags(write=False)
        self.coeffs = c

    @property
    def max_degree(self) -> int:
        return self.coeffs.size - 1

    def __call__(self, t: float) -> float:
        acc = 0.0
        for ck in self.coeffs[::-1]:
            acc = acc * t + ck
        return acc

    def __repr__(self):
        return f"TruncatedSeries({self.coeffs.tolist()})"

    def __eq__(self, other):
        return (isinstance(other, TruncatedSeries)
                and self.coeffs.size == other.coeffs.size
                and bool(np.all(self.coeffs == other.coeffs)))

    def __add__(self, other):
        return series_add(self, _coerce(other, self.max_degree))

    __radd__ = __add__

    def __sub__(self, other):
        return series_add(self, series_scale(_coerce(other, self.max_degree), -1.0))

    def __rsub__(self, other):
        return series_add(_coerce(other, self.max_degree), series_scale(self, -1.0))

    def __mul__(self, other):
        if isinstance(other, TruncatedSeries):
            return series_mul(self, other)
        return series_scale(self, float(other))

    __rmul__ = __mul__

    def __neg__(self):
        return series_scale(self, -1.0)


def _coerce(value, max_degree) -> TruncatedSeries:
    if isinstance(value, TruncatedSeries):
        return value
    return TruncatedSeries([float(value)], max_degree=max_degree)


def series_add(a: TruncatedSeries, b: TruncatedSeries) -> TruncatedSeries:
    n = max(a.coeffs.size, b.coeffs.size)
    out = np.zeros(n)
    out[:a.coeffs.size] += a.coeffs
    out[:b.coeffs.size] += b.coeffs
    return TruncatedSeries(out)


def series_scale(a: TruncatedSeries, factor: float) -> TruncatedSeries:
    return TruncatedSeries(a.coeffs * factor)


def series_mul(a: TruncatedSeries, b: TruncatedSeries,
               max_degree: int | None = None) -> TruncatedSeries:
    """Product truncated to ``max_degree`` (default: larger operand bound)."""
    if max_degree is None:
        max_degree = max(a.max_degree, b.max_degree)
    out = np.zeros(max_degree + 1)
    for i, ai in enumerate(a.coeffs):
        if i > max_degree or ai == 0.0:
            continue
        hi = min(b.coeffs.size, max_degree + 1 - i)
        out[i:i + hi] += ai * b.coeffs[:hi]
    return TruncatedSeries(out)


def series_integrate(a: TruncatedSeries, order: int = 1) -> TruncatedSeries:
    """Antiderivative from 0 (zero constants of integration); degree grows."""
    c = a.coeffs
    for _ in range(order):
        c = np.concatenate(([0.0], c / np.arange(1, c.size + 1)))
    return TruncatedSeries(c)


def series_differentiate(a: TruncatedSeries) -> TruncatedSeries:
    if a.coeffs.size == 1:
        return TruncatedSeries([0.0])
    return TruncatedSeries(a.coeffs[1:] * np.arange(1, a.coeffs.size))


def sin_cos_of_series(u: TruncatedSeries) -> tuple[TruncatedSeries, TruncatedSeries]:
    """Sine and cosine of a polynomial, exact to the polynomial's degree.

    Uses the coupled recurrence s' = v u', v' = -s u' seeded with the sine
    and cosine of the constant term, integrated coefficient by coefficient.
    """
    c = u.coeffs
    n = c.size
    s = np.zeros(n)
    v = np.zeros(n)
    s[0] = math.sin(c[0])
    v[0] = math.cos(c[0])
    for k in range(n - 1):
        acc_s = 0.0
        acc_v = 0.0
        for m in range(k + 1):
            w = (k + 1 - m) * c[k + 1 - m]
            acc_s += v[m] * w
            acc_v -= s[m] * w
        s[k + 1] = acc_s / (k + 1)
        v[k + 1] = acc_v / (k + 1)
    return TruncatedSeries(s), TruncatedSeries(v)


# ---------------------------------------------------------------------------
# Machine state and right-hand-side parameters


@dataclass(frozen=True)
class MachineState:
    """Absolute rotor angles (rad) and speed deviations (rad/s) at an instant."""

    delta: np.ndarray
    omega_dev: np.ndarray

    def __post_init__(self):
        d = np.array(self.delta, dtype=float)
        w = np.array(self.omega_dev, dtype=float)
        if d.shape != w.shape or d.ndim != 1:
            raise ValidationError("delta and omega_dev must be 1-D and equally long")
        if not (np.isfinite(d).all() and np.isfinite(w).all()):
            raise ValidationError("machine state contains non-finite entries")
        d.setflags(write=False)
        w.setflags(write=False)
        object.__setattr__(self, "delta", d)
        object.__setattr__(self, "omega_dev", w)

    @property
    def k(self) -> int:
        return self.delta.size


@dataclass(frozen=True, eq=False)
class SwingRhsParams:
    """Per-machine swing parameters plus the reduced network of one epoch.

    Encodes d delta_i/dt = dw_i and
    d dw_i/dt = (omega0 / 2 H_i)(Pm_i - Pe_i(delta)) - (D_i / 2 H_i) dw_i with
    Pe_i = sum_j E_i E_j Y_ij cos(delta_i - delta_j - theta_ij) (the j = i
    term is the self-conductance payment E_i^2 G_ii). An infinite inertia
    marks a node with prescribed drift: its acceleration is identically zero.
    """

    h: np.ndarray
    d: np.ndarray
    pm: np.ndarray
    e: np.ndarray
    network: ReducedNetwork
    omega0: float

    def __post_init__(self):
        k = self.network.k
        for name in ("h", "d", "pm", "e"):
            arr = np.array(getattr(self, name), dtype=float)
            if arr.shape != (k,):
                raise ValidationError(f"{name} must have one entry per machine ({k})")
            arr.setflags(write=False)
            object.__setattr__(self, name, arr)
        if not (self.h > 0).all():
            raise ValidationError("inertias must be positive")
        if not (self.d >= 0).all():
            raise ValidationError("damping must be non-negative")
        if not (self.e > 0).all():
            raise ValidationError("EMF magnitudes must be positive")
        if not (self.omega0 > 0 and math.isfinite(self.omega0)):
            raise ValidationError("omega0 must be positive and finite")
        if not np.isfinite(self.a).all():
            raise ValidationError("damping coefficients must be finite")

    @property
    def k(self) -> int:
        return self.network.k

    @cached_property
    def gain(self) -> np.ndarray:
        """omega0 / (2 H); zero for infinite-inertia (reference) nodes."""
        with np.errstate(divide="ignore"):
            g = self.omega0 / (2.0 * self.h)
        g[~np.isfinite(self.h)] = 0.0
        g.setflags(write=False)
        return g

    @cached_property
    def a(self) -> np.ndarray:
        """Damping coefficient D / (2 H)."""
        out = np.where(np.isfinite(self.h), self.d / (2.0 * self.h), 0.0)
        out.setflags(write=False)
        return out

    @cached_property
    def eey_cos(self) -> np.ndarray:
        out = np.outer(self.e, self.e) * self.network.y_mag * np.cos(self.network.y_ang)
        out.setflags(write=False)
        return out

    @cached_property
    def eey_sin(self) -> np.ndarray:
        out = np.outer(self.e, self.e) * self.network.y_mag * np.sin(self.network.y_ang)
        out.setflags(write=False)
        return out

    def electrical_power(self, delta: np.ndarray) -> np.ndarray:
        """Pe per machine at the given angle vector."""
        dd = delta[:, None] - delta[None, :]
        return (self.eey_cos * np.cos(dd) + self.eey_sin * np.sin(dd)).sum(axis=1)

    def acceleration(self, delta: np.ndarray, omega_dev: np.ndarray) -> np.ndarray:
        """d omega_dev / dt at the given state."""
        return self.gain * (self.pm - self.electrical_power(delta)) - self.a * omega_dev

    @classmethod
    def from_case(cls, case: PowerSystemCase, epoch: str) -> "SwingRhsParams":
        case = initialized_case(case)
        gens = case.generators
        return cls(
            h=np.array([g.H for g in gens]),
            d=np.array([g.D for g in gens]),
            pm=np.array([g.Pm for g in gens]),
            e=np.array([g.E for g in gens]),
            network=augment_and_reduce(case, epoch),
            omega0=case.omega0,
        )


def equilibrium_state(gens) -> MachineState:
    """The steady state (delta0, 0) of an initialized generator list."""
    d0 = []
    for g in gens:
        if g.delta0 is None:
            raise ValidationError("generators must be initialized first")
        d0.append(g.delta0)
    return MachineState(np.array(d0), np.zeros(len(d0)))


# ---------------------------------------------------------------------------
# Batched polynomial kernels (trailing axis = ascending t powers)


@lru_cache(maxsize=None)
def _conv_table(p: int) -> np.ndarray:
    """B[d, i, j] = 1 where i + j == d; contracts a truncated product."""
    b = np.zeros((p, p, p))
    for i in range(p):
        for j in range(p - i):
            b[i + j, i, j] = 1.0
    b.setflags(write=False)
    return b


def _tconv(a: np.ndarray, b: np.ndarray, table: np.ndarray) -> np.ndarray:
    return np.einsum("...p,...q,dpq->...d", a, b, table)


def _double_integral(c: np.ndarray) -> np.ndarray:
    """c_k t^k -> c_k t^(k+2) / ((k+1)(k+2)), truncated at the array's cap."""
    out = np.zeros_like(c)
    n = c.shape[-1]
    if n > 2:
        k = np.arange(n - 2)
        out[..., 2:] = c[..., :n - 2] / ((k + 1.0) * (k + 2.0))
    return out


def _single_integral(c: np.ndarray) -> np.ndarray:
    out = np.zeros_like(c)
    n = c.shape[-1]
    if n > 1:
        out[..., 1:] = c[..., :n - 1] / np.arange(1.0, n)
    return out


def _deriv_coeffs(c: np.ndarray) -> np.ndarray:
    return c[..., 1:] * np.arange(1.0, c.shape[-1])


def _polyval(c: np.ndarray, t) -> np.ndarray:
    acc = c[..., -1] + np.zeros_like(np.asarray(t, dtype=float))
    for k in range(c.shape[-1] - 2, -1, -1):
        acc = acc * t + c[..., k]
    return acc


class _TrigExpansion:
    """Lambda-order expansion of sin/cos of all pairwise angle differences.

    Holds, per lambda order n, the (K, K, degree+1) coefficient arrays of
    sin(w) and cos(w) where w_ij is the difference of machine angle series.
    Orders extend incrementally through the coupled recurrence
    (n) s_n = sum_m v_m (n-m) w_{n-m}, (n) v_n = -sum_m s_m (n-m) w_{n-m}.
    """

    def __init__(self, delta0: np.ndarray, p: int):
        k = delta0.size
        w0 = delta0[:, None] - delta0[None, :]
        s0 = np.zeros((k, k, p))
        c0 = np.zeros((k, k, p))
        s0[..., 0] = np.sin(w0)
        c0[..., 0] = np.cos(w0)
        wc = np.zeros((k, k, p))
        wc[..., 0] = w0
        self.w = [wc]
        self.sin = [s0]
        self.cos = [c0]
        self._table = _conv_table(p)

    def extend(self, x_next: np.ndarray):
        """Feed the next lambda order of the per-machine angle series (K, p)."""
        self.w.append(x_next[:, None, :] - x_next[None, :, :])
        n = len(self.sin)
        acc_s = None
        acc_c = None
        for m in range(n):
            scaled = (n - m) * self.w[n - m]
            ds = _tconv(self.cos[m], scaled, self._table)
            dc = _tconv(self.sin[m], scaled, self._table)
            acc_s = ds if acc_s is None else acc_s + ds
            acc_c = dc if acc_c is None else acc_c + dc
        self.sin.append(acc_s / n)
        self.cos.append(-acc_c / n)


def _coupling_term(rhs: SwingRhsParams, trig: _TrigExpansion, n: int) -> np.ndarray:
    """Lambda-order-n coefficient of Pe for every machine, shape (K, p)."""
    return (np.einsum("ij,ijp->ip", rhs.eey_cos, trig.cos[n])
            + np.einsum("ij,ijp->ip", rhs.eey_sin, trig.sin[n]))


def _nonlinearity_order(rhs: SwingRhsParams, trig: _TrigExpansion, n: int) -> np.ndarray:
    """A_n for every machine: lambda^n coefficient of gain * (Pm - Pe)."""
    out = -rhs.gain[:, None] * _coupling_term(rhs, trig, n)
    if n == 0:
        out[:, 0] += rhs.gain * rhs.pm
    return out


# ---------------------------------------------------------------------------
# Windows


@dataclass(frozen=True)
class SasWindow:
    """N polynomial terms per machine, their sum and derivatives, valid on
    [t_start, t_start + T] in local time.

    ``terms`` has shape (N, K, degree+1); ``sum_coeffs`` is the coefficient
    sum, ``sum_deriv`` its derivative and ``last_term_deriv`` the derivative
    of the highest-order term (the loss-of-accuracy probe).
    """

    t_start: float
    T: float
    n_terms: int
    terms: np.ndarray
    sum_coeffs: np.ndarray
    sum_deriv: np.ndarray
    last_term_deriv: np.ndarray

    @property
    def k(self) -> int:
        return self.terms.shape[1]

    def term(self, machine: int, order: int) -> TruncatedSeries:
        return TruncatedSeries(self.terms[order, machine])

    def sum_series(self, machine: int) -> TruncatedSeries:
        return TruncatedSeries(self.sum_coeffs[machine])

    def sum_deriv_series(self, machine: int) -> TruncatedSeries:
        return TruncatedSeries(self.sum_deriv[machine])

    def last_term_deriv_series(self, machine: int) -> TruncatedSeries:
        return TruncatedSeries(self.last_term_deriv[machine])


def derive_window(rhs: SwingRhsParams, state0: MachineState, n_terms: int,
                  degree_cap: int | None = None, t_start: float = 0.0,
                  window: float = math.inf) -> SasWindow:
    """Run the modified decomposition recursion from ``state0``.

    ``n_terms`` >= 2 terms are produced per machine; the default degree cap
    2 * n_terms exceeds the highest degree the recursion can reach, so the
    polynomial arithmetic is exact. The window length only tags the result's
    validity range; the coefficients do not depend on it.
    """
    if n_terms < 2:
        raise ValidationError("need at least two terms (initial angle and speed)")
    if state0.k != rhs.k:
        raise ValidationError("state size does not match machine count")
    m = 2 * n_terms if degree_cap is None else degree_cap
    p = m + 1
    k = rhs.k
    x = np.zeros((n_terms, k, p))
    x[0, :, 0] = state0.delta
    trig = _TrigExpansion(state0.delta, p)
    a_col = rhs.a[:, None]
    # overflow to inf is caught by the finiteness check below
    with np.errstate(over="ignore", invalid="ignore"):
        for n in range(n_terms - 1):
            if n > 0:
                trig.extend(x[n])
            a_n = _nonlinearity_order(rhs, trig, n)
            # -a II[dx_n/dt] realized as -a (I[x_n] - x_n(0) t): exact and cheap.
            damp = _single_integral(x[n])
            damp[:, 1] -= x[n, :, 0]
            x[n + 1] = _double_integral(a_n) - a_col * damp
            if n == 0:
                x[1, :, 1] += state0.omega_dev
            if not np.isfinite(x[n + 1]).all():
                bad = int(np.argwhere(~np.isfinite(x[n + 1]))[0][0])
                raise DivergenceError(
                    f"non-finite series coefficient at term order {n + 1}, "
                    f"machine {bad}", t=t_start, machine=bad)
    total = x.sum(axis=0)
    for arr in (x, total):
        arr.setflags(write=False)
    sum_deriv = _deriv_coeffs(total)
    last_deriv = _deriv_coeffs(x[-1])
    sum_deriv.setflags(write=False)
    last_deriv.setflags(write=False)
    return SasWindow(t_start=t_start, T=window, n_terms=n_terms, terms=x,
                     sum_coeffs=total, sum_deriv=sum_deriv,
                     last_term_deriv=last_deriv)


def eval_window(w: SasWindow, t_local: float) -> MachineState:
    """Evaluate angles and speeds at a window-local time (Horner)."""
    if not (-1e-12 <= t_local <= w.T + 1e-12):
        raise ValidationError(f"t_local={t_local} outside window [0, {w.T}]")
    return MachineState(_polyval(w.sum_coeffs, t_local),
                        _polyval(w.sum_deriv, t_local))


# ---------------------------------------------------------------------------
# Stand-alone Adomian polynomial extraction (shares the window engine kernels)


@dataclass(frozen=True)
class LambdaSeries:
    """Terms of a decomposition, indexed by lambda order then machine.

    ``term_coeffs`` has shape (orders, K, degree+1). Order zero must be
    constant in t (the modified recursion pins the initial value there).
    """

    term_coeffs: np.ndarray

    def __post_init__(self):
        c = np.array(self.term_coeffs, dtype=float)
        if c.ndim != 3:
            raise ValidationError("term_coeffs must be (orders, machines, degree+1)")
        if c.shape[2] > 1 and np.any(c[0, :, 1:] != 0.0):
            raise ValidationError("order-0 terms must be constant series")
        c.setflags(write=False)
        object.__setattr__(self, "term_coeffs", c)

    @property
    def n_orders(self) -> int:
        return self.term_coeffs.shape[0]

    @property
    def k(self) -> int:
        return self.term_coeffs.shape[1]

    def series(self, order: int, machine: int) -> TruncatedSeries:
        return TruncatedSeries(self.term_coeffs[order, machine])

    @classmethod
    def from_window(cls, w: SasWindow) -> "LambdaSeries":
        return cls(w.terms)

    @classmethod
    def from_terms(cls, terms) -> "LambdaSeries":
        """Build from nested [order][machine] lists of TruncatedSeries."""
        orders = len(terms)
        k = len(terms[0])
        p = 1 + max(s.max_degree for row in terms for s in row)
        out = np.zeros((orders, k, p))
        for n, row in enumerate(terms):
            if len(row) != k:
                raise ValidationError("ragged machine axis in terms")
            for i, s in enumerate(row):
                out[n, i, :s.coeffs.size] = s.coeffs
        return cls(out)


def adomian_terms(rhs: SwingRhsParams, x_prev: LambdaSeries,
                  order: int) -> list[TruncatedSeries]:
    """Adomian polynomials A_{i, order} of the swing nonlinearity.

    Composes the nonlinearity through the lambda series of the stored terms;
    the result equals the classical derivative definition. Requires the
    stored terms to cover lambda orders 0..order.
    """
    if order < 0 or order >= x_prev.n_orders:
        raise ValidationError(
            f"order {order} exceeds stored lambda orders (0..{x_prev.n_orders - 1})")
    if x_prev.k != rhs.k:
        raise ValidationError("machine count mismatch")
    p = x_prev.term_coeffs.shape[2]
    trig = _TrigExpansion(x_prev.term_coeffs[0, :, 0], p)
    for n in range(1, order + 1):
        trig.extend(x_prev.term_coeffs[n])
    a_n = _nonlinearity_order(rhs, trig, order)
    return [TruncatedSeries(a_n[i]) for i in range(rhs.k)]
