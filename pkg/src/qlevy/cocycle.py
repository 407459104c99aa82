"""Quantum stochastic convolution cocycles evaluated between exponential vectors.

For a stochastic generator phi (values on C + k, the "noise" space) and step
functions f, f' the matrix element of the cocycle at time t factors exactly:

    < eps(f'), l_t(x) eps(f) >
        = < eps(f'), eps(f) > (lam^{c'_1,c_1}_{d_1} * ... * lam^{c'_m,c_m}_{d_m})(x)

where the common refinement of f, f' on [0, t] has pieces of length d_i and
values c_i, c'_i, and each factor is the convolution semigroup generated by
x -> < (1,c'), phi(x) (1,c) >.  The factorization route is exact, so the
simplex-series expansion is kept only as an independent oracle, and truncation
appears only in the toy-Fock random-walk evolver.
"""

from dataclasses import dataclass

import numpy as np
from numpy.polynomial import legendre
from scipy.linalg import expm

from .convolution import (ConvolutionSemigroup, OperatorMap, convolve,
                          functional, lifted_matrix, semigroup_generator,
                          star_power)
from .linalg import maxabs, opnorm


class HorizonMismatch(ValueError):
    """A step function does not cover the requested time interval."""


class MemoryCapExceeded(RuntimeError):
    """Full-matrix toy-Fock evolution would exceed the configured cap."""


class OverlappingIntervals(ValueError):
    """Weak quantum Levy process moments need pairwise disjoint intervals."""


@dataclass(frozen=True)
class NoiseSpace:
    """The one-dimension-augmented noise space C + k."""

    d_noise: int

    @property
    def dim(self):
        return 1 + self.d_noise

    @property
    def e0(self):
        v = np.zeros(self.dim, dtype=complex)
        v[0] = 1.0
        return v

    @property
    def delta_qs(self):
        p = np.eye(self.dim, dtype=complex)
        p[0, 0] = 0.0
        return p

    def hat(self, c):
        c = np.asarray(c, dtype=complex).reshape(-1)
        if c.size != self.d_noise:
            raise ValueError(f"vector of size {c.size} in noise space of dim {self.d_noise}")
        return np.concatenate(([1.0], c))


@dataclass(frozen=True)
class StepFunction:
    """Right-continuous piecewise-constant function [0, t_m) -> C^{d_noise}."""

    breakpoints: np.ndarray  # (m+1,), starts at 0, strictly increasing
    values: np.ndarray       # (m, d_noise)

    def __post_init__(self):
        bp = np.asarray(self.breakpoints, dtype=float)
        vals = np.atleast_2d(np.asarray(self.values, dtype=complex))
        if bp.ndim != 1 or bp.size < 2 or abs(bp[0]) > 1e-15:
            raise ValueError("breakpoints must start at 0 with at least one piece")
        if np.any(np.diff(bp) <= 0):
            raise ValueError("breakpoints must be strictly increasing")
        if vals.shape[0] != bp.size - 1:
            raise ValueError("need one value row per piece")
        if not np.all(np.isfinite(vals)):
            raise ValueError("step values must be finite")
        object.__setattr__(self, "breakpoints", bp)
        object.__setattr__(self, "values", vals)

    @classmethod
    def constant(cls, c, horizon):
        c = np.asarray(c, dtype=complex).reshape(1, -1)
        return cls(np.array([0.0, float(horizon)]), c)

    @classmethod
    def zero(cls, d_noise, horizon):
        return cls.constant(np.zeros(d_noise), horizon)

    @property
    def d_noise(self):
        return self.values.shape[1]

    @property
    def horizon(self):
        return float(self.breakpoints[-1])

    def value_at(self, s):
        if s < 0 or s >= self.horizon:
            raise HorizonMismatch(f"time {s} outside [0, {self.horizon})")
        i = int(np.searchsorted(self.breakpoints, s, side="right")) - 1
        return self.values[min(i, self.values.shape[0] - 1)]

    def shifted_restriction(self, a, b):
        """The step function u -> f(a + u) on [0, b - a)."""
        if a < -1e-12 or b > self.horizon + 1e-9 or b <= a:
            raise HorizonMismatch(f"[{a}, {b}) not inside [0, {self.horizon})")
        pts = [a] + [float(p) for p in self.breakpoints if a < p < b - 1e-15] + [b]
        vals = [self.value_at(min(p, self.horizon - 1e-15)) for p in pts[:-1]]
        return StepFunction(np.array(pts) - a, np.array(vals))


def refine_pair(f, f_prime, t):
    """Common-refinement pieces of f, f' over [0, t].

    Returns a list of (duration, c, c') triples; near-coincident breakpoints
    (within 1e-12) are merged.
    """
    if f.d_noise != f_prime.d_noise:
        raise ValueError("step functions live in different noise spaces")
    if f.horizon < t - 1e-9 or f_prime.horizon < t - 1e-9:
        raise HorizonMismatch(f"step functions must cover [0, {t}]")
    pts = np.concatenate([[0.0, t], f.breakpoints, f_prime.breakpoints])
    pts = np.unique(pts[(pts > -1e-15) & (pts < t + 1e-15)])
    merged = [pts[0]]
    for p in pts[1:]:
        if p - merged[-1] > 1e-12:
            merged.append(p)
    if abs(merged[-1] - t) > 1e-12:
        merged.append(t)
    out = []
    for a, b in zip(merged[:-1], merged[1:]):
        mid = 0.5 * (a + b)
        out.append((b - a, f.value_at(mid), f_prime.value_at(mid)))
    return out


def exp_inner_product(f, g, t):
    """< eps(f), eps(g) > = exp of the integral of <f(s), g(s)> over [0, t]."""
    total = 0.0 + 0.0j
    for dt, cf, cg in refine_pair(f, g, t):
        total += dt * np.vdot(cf, cg)
    return complex(np.exp(total))


# -- stochastic generators ----------------------------------------------------

class Generator(OperatorMap):
    """An operator map into B(C + k) with block accessors (lam, delta, nu)."""

    def __post_init__(self):
        super().__post_init__()
        if self.p != self.q or self.p < 1:
            raise ValueError("a stochastic generator must take square values on C + k")

    @property
    def d_noise(self):
        return self.p - 1

    @property
    def noise(self):
        return NoiseSpace(self.d_noise)

    def lam_block(self):
        """Corner functional x -> phi(x)_{00}."""
        return functional(self.source, self.values[:, 0, 0])

    def delta_block(self):
        """Column block, a map into k-columns: values (d, d_noise, 1)."""
        return OperatorMap(self.source, self.values[:, 1:, 0:1])

    def delta_dag_block(self):
        """Row block: values (d, 1, d_noise)."""
        return OperatorMap(self.source, self.values[:, 0:1, 1:])

    def nu_block(self):
        return OperatorMap(self.source, self.values[:, 1:, 1:])

    def reality_defect(self):
        """Max deviation of phi(x*) from phi(x)^dagger over the basis."""
        return maxabs(self.conjugate_map().values - self.values)

    def is_real(self, tol=1e-10):
        return self.reality_defect() <= tol


def as_generator(phi):
    if isinstance(phi, Generator):
        return phi
    return Generator(phi.source, phi.values)


# -- matrix elements via semigroup factorization -----------------------------

def _interval_data(phi, f, f_prime, t):
    for g in (f, f_prime):
        if g.d_noise != phi.d_noise:
            raise ValueError(f"noise dimension mismatch: generator {phi.d_noise}, "
                             f"step function {g.d_noise}")
    return refine_pair(f, f_prime, t)


def cocycle_functional(phi, f, f_prime, t, reverse=False):
    """Coordinates of the functional x -> < eps(f'), l_t(x) eps(f) >.

    The inner-product prefactor over [0, t] is included.  ``reverse=True``
    composes the per-interval semigroup factors in reverse interval order,
    which is the opposite cocycle.
    """
    phi = as_generator(phi)
    src = phi.source
    if t < 0:
        raise ValueError("time must be nonnegative")
    if t == 0:
        return src.counit.astype(complex).copy()
    pieces = _interval_data(phi, f, f_prime, t)
    if reverse:
        pieces = pieces[::-1]
    lift = np.eye(src.dim, dtype=complex)
    pref = 1.0 + 0.0j
    for dt, c, cp in pieces:
        gamma = semigroup_generator(phi, cp, c)
        lift = lift @ expm(dt * lifted_matrix(gamma))
        pref *= np.exp(dt * np.vdot(cp, c))
    return pref * (src.counit @ lift)


def matrix_element(phi, x, f, f_prime, t):
    """< eps(f'_{[0,t[}), l_t(x) eps(f_{[0,t[}) > for the cocycle generated by phi."""
    coords = cocycle_functional(phi, f, f_prime, t)
    return complex(coords @ x.coords)


def opposite_matrix_element(phi, x, f, f_prime, t):
    """Matrix element of the opposite cocycle: same semigroup factors,
    composed in reverse interval order."""
    coords = cocycle_functional(phi, f, f_prime, t, reverse=True)
    return complex(coords @ x.coords)


def check_cocycle_identity(phi, s, t, f, f_prime):
    """Max residual over basis elements of the increment factorization

        l_{s+t}^{e',e} = l_s^{e'_1,e_1} * l_t^{e'_2,e_2}

    with e_1 from f on [0,s) and e_2 from the back-shifted f on [s, s+t)."""
    phi = as_generator(phi)
    src = phi.source
    lhs = cocycle_functional(phi, f, f_prime, s + t)
    if s == 0:
        l1 = functional(src, src.counit)
    else:
        l1 = functional(src, cocycle_functional(phi, f, f_prime, s))
    if t == 0:
        l2 = functional(src, src.counit)
    else:
        f2 = f.shifted_restriction(s, s + t)
        fp2 = f_prime.shifted_restriction(s, s + t)
        l2 = functional(src, cocycle_functional(phi, f2, fp2, t))
    rhs = convolve(l1, l2).as_vector()
    return maxabs(lhs - rhs)


# -- simplex-series oracle -----------------------------------------------------

_GL_NODES = 16


def _legendre_integration(nodes):
    """S[j, l] = integral of the l-th Lagrange basis polynomial (on the GL
    nodes, over [-1, 1]) from -1 to nodes[j]; w[l] = integral over [-1, 1].

    Lagrange polynomials are expanded in Legendre polynomials, whose
    antiderivatives are closed-form; this keeps the matrix well conditioned.
    """
    n = nodes.size
    _, gl_w = np.polynomial.legendre.leggauss(n)
    # c[l, m]: Legendre coefficient m of the l-th Lagrange polynomial
    pvals = np.stack([legendre.legval(nodes, [0] * m + [1]) for m in range(n)])
    c = (gl_w[None, :] * pvals).T * ((2 * np.arange(n) + 1) / 2.0)[None, :]
    s = np.zeros((n, n))
    for j, xj in enumerate(nodes):
        anti = np.zeros(n)
        anti[0] = xj + 1.0
        for m in range(1, n):
            pm1 = legendre.legval(xj, [0] * (m + 1) + [1])
            pm_1 = legendre.legval(xj, [0] * (m - 1) + [1])
            lo = legendre.legval(-1.0, [0] * (m + 1) + [1]) - legendre.legval(-1.0, [0] * (m - 1) + [1])
            anti[m] = (pm1 - pm_1 - lo) / (2 * m + 1)
        s[j] = c @ anti
    return s, gl_w


_GLX, _ = np.polynomial.legendre.leggauss(_GL_NODES)
_GLS, _GLW = _legendre_integration(_GLX)


def simplex_series_oracle(phi, x, f, f_prime, t, n_max, apply_order_reversal=True):
    """Truncated simplex-integral expansion of the matrix element.

    The n-th term integrates, over the ordered simplex 0 < s_1 < ... < s_n < t,
    the n-fold convolution of the sliced generators gamma_{s_i}; the correct
    pairing puts earlier times in earlier convolution slots (this is the
    order-reversing flip of the raw kernel).  With
    ``apply_order_reversal=False`` the unflipped pairing is summed instead,
    which is the expansion of the *opposite* cocycle: it disagrees with
    :func:`matrix_element` on noncocommutative coalgebras and converges to
    :func:`opposite_matrix_element`.

    Integration is piecewise Gauss-Legendre (16 nodes per dimension) split at
    the step-function breakpoints, so each smooth piece is integrated exactly.
    Returns ``(value, tail_bound)`` with a rigorous bound on the dropped tail.
    """
    phi = as_generator(phi)
    src = phi.source
    d = src.dim
    pieces = _interval_data(phi, f, f_prime, t)
    gammas = [semigroup_generator(phi, cp, c).as_vector() for _, c, cp in pieces]
    taus = [lifted_matrix(functional(src, g)) for g in gammas]

    def conv(a, b):
        return np.einsum("kij,i,j->k", src.coproduct, a, b)

    def attach(h, g):
        return conv(h, g) if apply_order_reversal else conv(g, h)

    eps = src.counit.astype(complex)
    total = eps.copy()
    # per level: values of H_k at the GL nodes of every piece, plus the
    # running value at each piece boundary
    prev_nodes = [np.tile(eps, (_GL_NODES, 1)) for _ in pieces]
    for _level in range(1, n_max + 1):
        cur_nodes = []
        boundary = np.zeros(d, dtype=complex)
        for idx, (dt, _, _) in enumerate(pieces):
            g = gammas[idx]
            integrand = np.stack([attach(h, g) for h in prev_nodes[idx]])
            half = dt / 2.0
            node_vals = boundary[None, :] + half * (_GLS @ integrand)
            boundary = boundary + half * (_GLW @ integrand)
            cur_nodes.append(node_vals)
        total = total + boundary
        prev_nodes = cur_nodes
    value = complex(_pref(pieces) * (total @ x.coords))
    m = max((opnorm(tau) for tau in taus), default=0.0)
    tail = _series_tail(m * t, n_max) * float(np.linalg.norm(src.counit)) \
        * float(np.linalg.norm(x.coords)) * abs(_pref(pieces))
    return value, tail


def _pref(pieces):
    return np.exp(sum(dt * np.vdot(cp, c) for dt, c, cp in pieces))


def _series_tail(z, n):
    """Sum_{k > n} z^k / k!, summed forward to avoid cancellation."""
    k = n + 1
    term = 1.0
    for j in range(1, k + 1):
        term *= z / j
    total = 0.0
    for _ in range(400):
        total += term
        k += 1
        term *= z / k
        if term < 1e-18 * max(total, 1.0):
            break
    return total + term


def constant_collapse(phi, x, c, c_prime, t, n_max):
    """Sum_{n<=n_max} t^n/n! (omega_{c',c} o phi)^{*n}(x): the collapsed form
    of the simplex series for constant step data."""
    phi = as_generator(phi)
    gamma = semigroup_generator(phi, c_prime, c)
    total = 0.0 + 0.0j
    coef = 1.0
    for n in range(n_max + 1):
        total += coef * star_power(gamma, n)(x)
        coef *= t / (n + 1)
    return complex(np.exp(t * np.vdot(np.asarray(c_prime), np.asarray(c))) * total)


# -- toy Fock random walk ------------------------------------------------------

@dataclass
class ToyFockResult:
    vacuum: complex
    full: np.ndarray = None  # values (d, D^N, D^N) when requested


def toy_fock_step_map(phi, h):
    """One random-walk step: x -> eps(x) I + D_h phi(x) D_h, D_h = diag(sqrt h, I)."""
    phi = as_generator(phi)
    dh = np.eye(phi.p, dtype=complex)
    dh[0, 0] = np.sqrt(h)
    vals = phi.source.counit[:, None, None] * np.eye(phi.p)[None, :, :] \
        + dh @ phi.values @ dh
    return OperatorMap(phi.source, vals)


def toy_fock_evolve(phi, x, t, steps, mode="slice", memory_cap_bytes=2 ** 28):
    """N-step toy-Fock approximation of the cocycle at time t.

    ``slice`` mode contracts the vacuum slot step by step (no size cap);
    ``full`` mode returns the whole map into the N-fold matrix tensor power
    and raises :class:`MemoryCapExceeded` above the byte cap.
    """
    phi = as_generator(phi)
    if steps < 1:
        raise ValueError("need at least one step")
    src = phi.source
    h = t / steps
    step = toy_fock_step_map(phi, h)
    if mode == "slice":
        m = np.eye(src.dim, dtype=complex) + h * lifted_matrix(phi.lam_block())
        coords = src.counit @ np.linalg.matrix_power(m, steps)
        return ToyFockResult(vacuum=complex(coords @ x.coords))
    if mode != "full":
        raise ValueError(f"unknown mode {mode!r}")
    dim_total = phi.p ** steps
    need = src.dim * dim_total * dim_total * 16
    if need > memory_cap_bytes:
        raise MemoryCapExceeded(f"full toy-Fock map needs {need} bytes "
                                f"(cap {memory_cap_bytes})")
    walk = step
    for _ in range(steps - 1):
        walk = convolve(walk, step)
    full = np.einsum("k,kab->ab", x.coords, walk.values)
    return ToyFockResult(vacuum=complex(full[0, 0]),
                         full=walk.values)


# -- weak quantum Levy process distributions ----------------------------------

def weak_qlp_moments(phi, intervals, elements):
    """Joint moment of increments over pairwise disjoint intervals:
    the product of the marginal vacuum-semigroup values.

    The weak axioms give no recipe for overlapping intervals, so those are
    rejected rather than guessed at.
    """
    phi = as_generator(phi)
    if len(intervals) != len(elements):
        raise ValueError("need one element per interval")
    ivs = [(float(s), float(t)) for s, t in intervals]
    for s, t in ivs:
        if t <= s:
            raise ValueError(f"empty interval [{s}, {t})")
    for i, (s1, t1) in enumerate(ivs):
        for s2, t2 in ivs[i + 1:]:
            if max(s1, s2) < min(t1, t2) - 1e-15:
                raise OverlappingIntervals(
                    f"intervals [{s1},{t1}) and [{s2},{t2}) overlap")
    sg = ConvolutionSemigroup(phi.lam_block())
    out = 1.0 + 0.0j
    for (s, t), x in zip(ivs, elements):
        out *= sg(t - s, x)
    return complex(out)


def vacuum_semigroup(phi):
    return ConvolutionSemigroup(as_generator(phi).lam_block())
