"""Construction and classification of stochastic generators.

Three routes are implemented:

* counit-structure maps implemented by a pair (representation, vector),
  which generate the *-homomorphic cocycles;
* completely positive generator forms built from a quadruple
  (representation, contraction D, vector xi, value at 1), which generate
  the completely positive contractive cocycles;
* GNS reconstruction of a generator from a real, conditionally positive
  functional vanishing at 1 (the generator datum of a quantum Levy process).

Everything returns residual reports rather than proofs; tolerances follow
the package-wide policy (structural ~1e-12, spectral -1e-10).
"""

from dataclasses import dataclass

import numpy as np

from .cocycle import Generator, as_generator
from .convolution import OperatorMap, functional
from .linalg import (dagger, lstsq_minnorm, maxabs, min_eig_herm,
                     numerical_rank, opnorm)


# -- representation utilities -------------------------------------------------

def representation_defect(pi):
    """Max residual of unitality, multiplicativity and star-preservation."""
    src = pi.source
    eye = np.eye(pi.p)
    unital = maxabs(np.einsum("k,kab->ab", src.unit, pi.values) - eye)
    mult = maxabs(np.einsum("iab,jbc->ijac", pi.values, pi.values)
                  - np.einsum("ijk,kac->ijac", src.mult, pi.values))
    starp = maxabs(pi.conjugate_map().values - pi.values)
    return max(unital, mult, starp)


def validate_representation(pi, tol=1e-10):
    defect = representation_defect(pi)
    if defect > tol:
        raise ValueError(f"not a unital *-representation (defect {defect:.2e})")
    return pi


def is_character(chi, tol=1e-10):
    return chi.is_functional and representation_defect(chi) <= tol


# -- Schurmann triples ---------------------------------------------------------

@dataclass
class SchurmannTriple:
    """(pi, delta, lam): a *-representation, a (pi, eps)-derivation into
    columns, and a real functional whose sesquilinear defect is delta* delta."""

    pi: OperatorMap          # into M_n
    delta: OperatorMap       # into n x 1 columns
    lam: OperatorMap         # functional
    n: int

    def residuals(self):
        src = self.pi.source
        eps = src.counit
        star = src.star_matrix
        dv = self.delta.values[:, :, 0]
        lv = self.lam.as_vector()
        out = {"representation": representation_defect(self.pi)}
        lhs = np.einsum("ijk,ka->ija", src.mult, dv)
        rhs = np.einsum("ia,j->ija", dv, eps) \
            + np.einsum("iab,jb->ija", self.pi.values, dv)
        out["derivation"] = maxabs(lhs - rhs)
        lam_xy = np.einsum("mi,mjk,k->ij", star, src.mult, lv)
        lhs = lam_xy - np.outer(np.conjugate(lv), eps) - np.outer(np.conjugate(eps), lv)
        rhs = np.einsum("ia,ja->ij", np.conjugate(dv), dv)
        out["sesquilinear"] = maxabs(lhs - rhs)
        out["reality"] = maxabs(self.lam.conjugate_map().values - self.lam.values)
        return out

    def max_residual(self):
        return max(self.residuals().values())


# -- counit-structure maps ------------------------------------------------------

def make_structure_map(pi, c):
    """phi(x) = [<c|; I] (pi(x) - eps(x) I) [|c>, I], the implemented
    structure map of a unital *-representation pi and vector c.

    The resulting generator has noise dimension n = dim pi, satisfies
    phi(1) = 0 and the multiplicative structure relation exactly.
    """
    validate_representation(pi)
    src = pi.source
    n = pi.p
    c = np.asarray(c, dtype=complex).reshape(-1)
    if c.size != n:
        raise ValueError(f"vector size {c.size} does not match representation dim {n}")
    b = pi.values - src.counit[:, None, None] * np.eye(n)[None, :, :]
    d = src.dim
    vals = np.zeros((d, 1 + n, 1 + n), dtype=complex)
    vals[:, 0, 0] = np.einsum("a,kab,b->k", np.conjugate(c), b, c)
    vals[:, 0, 1:] = np.einsum("a,kab->kb", np.conjugate(c), b)
    vals[:, 1:, 0] = np.einsum("kab,b->ka", b, c)
    vals[:, 1:, 1:] = b
    return Generator(src, vals)


def check_structure_map(phi):
    """Residual report for the structure relation

        phi(x*y) = phi(x)^dag eps(y) + conj(eps(x)) phi(y)
                   + phi(x)^dag Delta_QS phi(y)

    over all basis pairs, plus reality and phi(1) residuals."""
    phi = as_generator(phi)
    src = phi.source
    star = src.star_matrix
    lhs = np.einsum("mi,mjk,kab->ijab", star, src.mult, phi.values)
    phidag = dagger(phi.values)
    eps = src.counit
    pdq = phidag @ phi.noise.delta_qs
    rhs = np.einsum("iab,j->ijab", phidag, eps) \
        + np.einsum("i,jab->ijab", np.conjugate(eps), phi.values) \
        + np.einsum("iab,jbc->ijac", pdq, phi.values)
    return {
        "relation": maxabs(lhs - rhs),
        "reality": phi.reality_defect(),
        "unitality": maxabs(np.einsum("k,kab->ab", src.unit, phi.values)),
    }


def is_structure_map(phi, tol=1e-10):
    return max(check_structure_map(phi).values()) <= tol


# -- completely positive generator forms ----------------------------------------

@dataclass
class CPQuadruple:
    """(rho, D, xi, phi1): data for a CP-contractive cocycle generator."""

    rho: OperatorMap         # unital *-representation into M_K
    big_d: np.ndarray        # K x d_noise contraction
    xi: np.ndarray           # vector in C^K
    phi1: np.ndarray         # (1 + d_noise) square: the value at 1

    def __post_init__(self):
        self.big_d = np.asarray(self.big_d, dtype=complex)
        self.xi = np.asarray(self.xi, dtype=complex).reshape(-1)
        self.phi1 = np.asarray(self.phi1, dtype=complex)

    @property
    def space_dim(self):
        return self.rho.p

    @property
    def d_noise(self):
        return self.big_d.shape[1]

    def residuals(self):
        dd = dagger(self.big_d) @ self.big_d - np.eye(self.d_noise)
        return {
            "representation": representation_defect(self.rho),
            "contraction": max(0.0, opnorm(self.big_d) - 1.0),
            "phi1_nonpositive": max(0.0, -min_eig_herm(-self.phi1)),
            "phi1_corner": maxabs(self.phi1[1:, 1:] - dd),
        }

    def validate(self):
        thresholds = {"representation": 1e-10, "contraction": 1e-12,
                      "phi1_nonpositive": 1e-10, "phi1_corner": 1e-12}
        res = self.residuals()
        bad = {k: v for k, v in res.items() if v > thresholds[k]}
        if bad:
            raise ValueError(f"invalid CP quadruple: {bad}")
        return self


def canonical_phi1(big_d, e=None, t=None):
    """A valid phi(1) block for a given contraction: [[t, (C^1/2 e)^dag],
    [C^1/2 e, -C]] with C = I - D^dag D, e in Ran C and t <= -||e||^2."""
    big_d = np.asarray(big_d, dtype=complex)
    k = big_d.shape[1]
    c = np.eye(k) - dagger(big_d) @ big_d
    c = 0.5 * (c + dagger(c))
    if e is None:
        e = np.zeros(k, dtype=complex)
    e = np.asarray(e, dtype=complex).reshape(-1)
    vals, vecs = np.linalg.eigh(c)
    vals = np.clip(vals, 0.0, None)
    chalf = vecs @ np.diag(np.sqrt(vals)) @ dagger(vecs)
    e = chalf @ chalf @ np.linalg.pinv(c, rcond=1e-12) @ e  # project onto Ran C
    col = chalf @ e
    tmax = -float(np.vdot(e, e).real)
    t = tmax if t is None else min(float(t), tmax)
    out = np.zeros((1 + k, 1 + k), dtype=complex)
    out[0, 0] = t
    out[0, 1:] = np.conjugate(col)
    out[1:, 0] = col
    out[1:, 1:] = -c
    return out


def make_cp_generator(q):
    """phi(x) = [<xi|; D^dag] (rho(x) - eps(x) I) [|xi>, D] + eps(x) phi(1)."""
    q.validate()
    src = q.rho.source
    w = np.concatenate([q.xi[:, None], q.big_d], axis=1)  # K x (1 + k)
    b = q.rho.values - src.counit[:, None, None] * np.eye(q.space_dim)[None, :, :]
    vals = dagger(w)[None, :, :] @ b @ w[None, :, :] \
        + src.counit[:, None, None] * q.phi1[None, :, :]
    return Generator(src, vals)


def check_cp_form(phi, q):
    """Residuals of the quadruple decomposition of phi: the compressed form
    and the equivalent CP-minus-ampliation split with the derived vector chi."""
    phi = as_generator(phi)
    src = phi.source
    rebuilt = make_cp_generator(q)
    decomposition = maxabs(phi.values - rebuilt.values)
    w = np.concatenate([q.xi[:, None], q.big_d], axis=1)
    psi = dagger(w)[None, :, :] @ q.rho.values @ w[None, :, :]
    phi1 = np.einsum("k,kab->ab", src.unit, phi.values)
    chi = np.concatenate([[0.5 * (np.vdot(q.xi, q.xi) - phi1[0, 0])],
                          dagger(q.big_d) @ q.xi - phi1[1:, 0]])
    ns = phi.noise
    amp = ns.delta_qs + np.outer(ns.e0, np.conjugate(chi)) \
        + np.outer(chi, np.conjugate(ns.e0))
    split = maxabs(phi.values - (psi - src.counit[:, None, None] * amp[None, :, :]))
    return {"decomposition": decomposition, "cp_split": split}


def check_phi1(phi, q=None, tol=1e-10):
    """-phi(1) PSD; with a quadruple also the lower-right block identity
    phi(1)[1:, 1:] = D^dag D - I."""
    phi = as_generator(phi)
    phi1 = np.einsum("k,kab->ab", phi.source.unit, phi.values)
    out = {"nonpositive": max(0.0, -min_eig_herm(-phi1))}
    if q is not None:
        dd = dagger(q.big_d) @ q.big_d - np.eye(q.d_noise)
        out["corner"] = maxabs(phi1[1:, 1:] - dd)
    out["ok"] = out["nonpositive"] <= tol and out.get("corner", 0.0) <= 1e-12
    return out


# -- GNS / Schurmann reconstruction ---------------------------------------------

class NotConditionallyPositive(ValueError):
    pass


def _counit_kernel_basis(src):
    """Columns spanning Ker eps: projections e_i - eps(e_i) 1, one index dropped."""
    d = src.dim
    k0 = int(np.argmax(np.abs(src.counit * src.unit)))
    cols = []
    for i in range(d):
        if i == k0:
            continue
        v = np.zeros(d, dtype=complex)
        v[i] = 1.0
        cols.append(v - src.counit[i] * src.unit)
    return np.stack(cols, axis=1), k0  # d x (d-1)


def kernel_gram(gamma):
    """Gram matrix gamma(b_i^* b_j) over the counit-kernel basis."""
    src = gamma.source
    kb, _ = _counit_kernel_basis(src)
    gv = gamma.as_vector()
    star_cols = src.star_matrix @ np.conjugate(kb)       # coords of b_i^*
    gram = np.einsum("mi,nj,mnk,k->ij", star_cols, kb, src.mult, gv)
    return gram, kb


def check_conditionally_positive(gamma, tol=1e-10):
    """(is conditionally positive, margin): the margin is the minimum
    eigenvalue of the counit-kernel Gram matrix."""
    g, _ = kernel_gram(gamma)
    margin = min_eig_herm(g) if g.size else 0.0
    return margin >= -tol, margin


def gns_construct(gamma, tol=None, check_tol=1e-9):
    """GNS-style reconstruction of a Schurmann triple and a generator from a
    real, conditionally positive functional vanishing at 1.

    The quotient of Ker eps by the null space of gamma(x* y) is charted by
    the Gram eigenvectors above the rank threshold (descending eigenvalue,
    first sizable component of each eigenvector rotated positive real, so the
    output is deterministic).  The triple is (compressed left multiplication,
    class of x - eps(x) 1, gamma); the returned generator is its block
    assembly, with noise dimension equal to the numerical rank.  The triple
    relations are re-verified at ``check_tol`` before returning.
    """
    src = gamma.source
    gv = gamma.as_vector()
    reality = maxabs(gamma.conjugate_map().values - gamma.values)
    if reality > 1e-10:
        raise ValueError(f"generator functional is not real (defect {reality:.2e})")
    at_one = abs(complex(gv @ src.unit))
    if at_one > 1e-10:
        raise ValueError(f"generator functional must vanish at 1 (got {at_one:.2e})")
    gram, kb = kernel_gram(gamma)
    gram = 0.5 * (gram + dagger(gram))
    vals, vecs = np.linalg.eigh(gram)
    vals, vecs = vals[::-1], vecs[:, ::-1]
    scale = float(vals[0]) if vals.size and vals[0] > 0 else 0.0
    cut = (1e-10 * scale) if tol is None else tol
    if vals.size and vals[-1] < -max(cut, 1e-10):
        raise NotConditionallyPositive(f"Gram matrix has eigenvalue {vals[-1]:.3e}")
    rank = int(np.sum(vals > max(cut, 0.0)))
    vecs = vecs[:, :rank].copy()
    for r in range(rank):
        col = vecs[:, r]
        idx = np.nonzero(np.abs(col) > 1e-8)[0]
        if idx.size:
            vecs[:, r] = col * np.exp(-1j * np.angle(col[idx[0]]))
    roots = np.sqrt(vals[:rank])
    chart = roots[:, None] * dagger(vecs)          # rank x (d-1)
    chart_inv = vecs / roots[None, :]              # (d-1) x rank
    kb_pinv = np.linalg.pinv(kb, rcond=1e-12)

    d = src.dim
    pi_vals = np.zeros((d, rank, rank), dtype=complex)
    for a in range(d):
        prod = np.einsum("jk,jc->kc", src.mult[a], kb)   # columns e_a . b_c
        pi_vals[a] = chart @ (kb_pinv @ prod) @ chart_inv
    pi = OperatorMap(src, pi_vals)

    proj = np.eye(d, dtype=complex) - np.outer(src.unit, src.counit)
    dmat = chart @ kb_pinv @ proj                  # rank x d
    delta = OperatorMap(src, dmat.T[:, :, None])
    triple = SchurmannTriple(pi=pi, delta=delta, lam=gamma, n=rank)

    vals_phi = np.zeros((d, 1 + rank, 1 + rank), dtype=complex)
    vals_phi[:, 0, 0] = gv
    vals_phi[:, 1:, 0] = delta.values[:, :, 0]
    vals_phi[:, 0, 1:] = delta.conjugate_map().values[:, 0, :]
    vals_phi[:, 1:, 1:] = pi_vals - src.counit[:, None, None] * np.eye(rank)
    phi = Generator(src, vals_phi)
    worst = triple.max_residual()
    if worst > check_tol:
        raise RuntimeError(f"reconstructed triple violates its relations "
                           f"(residual {worst:.3e} > {check_tol:.0e}); "
                           f"try raising the rank threshold")
    return triple, phi


# -- minimality and intertwiners --------------------------------------------------

def check_minimality(q, rtol=1e-10):
    """Whether rho(B)(C xi + Ran D) spans the whole representation space."""
    seed = np.concatenate([q.xi[:, None], q.big_d], axis=1)
    spans = np.concatenate([q.rho.values[a] @ seed
                            for a in range(q.rho.source.dim)], axis=1)
    return numerical_rank(spans, rtol=rtol) == q.space_dim


class NoIntertwiner(RuntimeError):
    def __init__(self, residual):
        self.residual = residual
        super().__init__(f"no isometric intertwiner within tolerance "
                         f"(best residual {residual:.3e})")


def intertwine_minimal(q1, q2, tol=1e-9):
    """The unique isometry V with V D1 = D2, V xi1 = xi2, V rho1 = rho2 V,
    for a minimal first quadruple.

    Solved as one stacked least-squares problem over vec(V); raises
    :class:`NoIntertwiner` if the best residual exceeds ``tol``."""
    if not check_minimality(q1):
        raise ValueError("first quadruple must be minimal")
    k1, k2 = q1.space_dim, q2.space_dim
    rows = [np.kron(q1.big_d.T, np.eye(k2)),
            np.kron(q1.xi[None, :], np.eye(k2))]
    rhs = [q2.big_d.reshape(-1, order="F"), q2.xi]
    for a in range(q1.rho.source.dim):
        rows.append(np.kron(q1.rho.values[a].T, np.eye(k2))
                    - np.kron(np.eye(k1), q2.rho.values[a]))
        rhs.append(np.zeros(k2 * k1, dtype=complex))
    amat = np.concatenate(rows, axis=0)
    bvec = np.concatenate(rhs)
    v = lstsq_minnorm(amat, bvec).reshape(k2, k1, order="F")
    residual = maxabs(amat @ v.reshape(-1, order="F") - bvec)
    if residual > tol:
        raise NoIntertwiner(residual)
    defect = maxabs(dagger(v) @ v - np.eye(k1))
    return v, {"residual": residual, "isometry_defect": defect}
