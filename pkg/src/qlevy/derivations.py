"""Twisted derivations, innerness solvers and chi-structure maps.

A (pi', pi)-derivation satisfies delta(ab) = delta(a) pi(b) + pi'(a) delta(b);
in finite dimensions every such derivation is inner, delta(a) =
pi'(a) T - T pi(a), and the implementing T is found here by minimal-norm
least squares over the stacked commutation constraints.  A chi-structure map
is the counit-free generalization of the multiplicative structure relation;
it is always implemented by a pair (pi, xi), and the implementation is
recovered the same way.
"""

from dataclasses import dataclass

import numpy as np

from .convolution import OperatorMap
from .generators import is_character, representation_defect, validate_representation
from .linalg import dagger, lstsq_minnorm, maxabs, numerical_rank


@dataclass
class DerivationProblem:
    """(pi', pi, delta) with delta valued in n' x n matrices."""

    pi_prime: OperatorMap   # into M_{n'}
    pi: OperatorMap         # into M_n
    delta: OperatorMap      # into n' x n

    def __post_init__(self):
        if not (self.pi_prime.source.same_structure(self.pi.source)
                and self.delta.source.same_structure(self.pi.source)):
            raise ValueError("all maps must share a source bialgebra")
        if self.delta.p != self.pi_prime.p or self.delta.q != self.pi.p:
            raise ValueError("delta must take n' x n values")

    def validated(self, tol=1e-10):
        validate_representation(self.pi_prime, tol)
        validate_representation(self.pi, tol)
        res = check_derivation(self)
        if res > tol:
            raise ValueError(f"Leibniz relation fails (residual {res:.2e})")
        return self


def inner_derivation(pi_prime, pi, t):
    """delta(a) = pi'(a) T - T pi(a) as an OperatorMap."""
    t = np.asarray(t, dtype=complex)
    vals = pi_prime.values @ t[None, :, :] - t[None, :, :] @ pi.values
    return OperatorMap(pi.source, vals)


def check_derivation(problem):
    """Max residual of the Leibniz relation over basis pairs."""
    src = problem.pi.source
    dv = problem.delta.values
    lhs = np.einsum("ijk,kab->ijab", src.mult, dv)
    rhs = np.einsum("iab,jbc->ijac", dv, problem.pi.values) \
        + np.einsum("iab,jbc->ijac", problem.pi_prime.values, dv)
    return maxabs(lhs - rhs)


def solve_inner(problem, check_tol=1e-8):
    """Minimal-norm T with pi'(e_i) T - T pi(e_i) = delta(e_i) for every i.

    In finite dimensions the Leibniz relation guarantees solvability; the
    input is rejected when its derivation residual exceeds ``check_tol``.
    Returns (T, residual).
    """
    res = check_derivation(problem)
    if res > check_tol:
        raise ValueError(f"input is not a derivation (Leibniz residual {res:.2e})")
    np_, nq = problem.delta.p, problem.delta.q
    rows, rhs = [], []
    for a in range(problem.pi.source.dim):
        # vec(pi'(a) T - T pi(a)) with column stacking
        rows.append(np.kron(np.eye(nq), problem.pi_prime.values[a])
                    - np.kron(problem.pi.values[a].T, np.eye(np_)))
        rhs.append(problem.delta.values[a].reshape(-1, order="F"))
    amat = np.concatenate(rows, axis=0)
    bvec = np.concatenate(rhs)
    t = lstsq_minnorm(amat, bvec).reshape(np_, nq, order="F")
    residual = maxabs(inner_derivation(problem.pi_prime, problem.pi, t).values
                      - problem.delta.values)
    return t, residual


def derivation_constraint_matrix(src, chi_prime, chi):
    """Leibniz constraints for an unknown scalar (chi', chi)-derivation,
    as a d^2 x d matrix applied to the vector of values delta(e_k)."""
    d = src.dim
    cp = chi_prime.as_vector()
    c = chi.as_vector()
    out = np.zeros((d * d, d), dtype=complex)
    for i in range(d):
        for j in range(d):
            out[i * d + j] = src.mult[i, j]
            out[i * d + j, i] -= c[j]
            out[i * d + j, j] -= cp[i]
    return out


def two_character_derivation_space(src, chi_prime, chi, rtol=1e-10):
    """Dimensions (total, non_inner) of the scalar (chi', chi)-derivation space.

    Every solution of the Leibniz system is inner, i.e. a multiple of
    chi' - chi; so ``non_inner`` is always 0 and ``total`` is 1 for distinct
    characters and 0 for equal ones.  (The nonzero solution chi' - chi for
    distinct characters is genuine: on functions, delta(FG) = F(p)G(p) -
    F(q)G(q) = delta(F) G(q) + F(p) delta(G).)
    """
    amat = derivation_constraint_matrix(src, chi_prime, chi)
    _, s, vh = np.linalg.svd(amat)
    scale = s[0] if s.size and s[0] > 0 else 1.0
    null = np.conjugate(vh[s <= rtol * scale])
    total = null.shape[0]
    inner = (chi_prime.as_vector() - chi.as_vector()).reshape(1, -1)
    if numerical_rank(inner) == 0:
        non_inner = total
    else:
        non_inner = numerical_rank(np.concatenate([inner, null])) - 1
    return total, non_inner


# -- chi-structure maps ---------------------------------------------------------

def check_chi_structure(phi, chi):
    """Residual of phi(a*b) = phi(a)^dag chi(b) + conj(chi(a)) phi(b)
    + phi(a)^dag Delta phi(b), Delta = diag(0, I)."""
    if not is_character(chi):
        raise ValueError("chi must be a character")
    src = phi.source
    star = src.star_matrix
    cv = chi.as_vector()
    n = phi.p - 1
    delta_qs = np.eye(phi.p, dtype=complex)
    delta_qs[0, 0] = 0.0
    lhs = np.einsum("mi,mjk,kab->ijab", star, src.mult, phi.values)
    phidag = dagger(phi.values)
    rhs = np.einsum("iab,j->ijab", phidag, cv) \
        + np.einsum("i,jab->ijab", np.conjugate(cv), phi.values) \
        + np.einsum("iab,jbc->ijac", phidag @ delta_qs, phi.values)
    return maxabs(lhs - rhs)


def implemented_chi_structure(pi, chi, xi):
    """phi(a) = [<xi|; I] (pi(a) - chi(a) I) [|xi>, I]."""
    src = pi.source
    n = pi.p
    xi = np.asarray(xi, dtype=complex).reshape(-1)
    b = pi.values - chi.as_vector()[:, None, None] * np.eye(n)[None, :, :]
    d = src.dim
    vals = np.zeros((d, 1 + n, 1 + n), dtype=complex)
    vals[:, 0, 0] = np.einsum("a,kab,b->k", np.conjugate(xi), b, xi)
    vals[:, 0, 1:] = np.einsum("a,kab->kb", np.conjugate(xi), b)
    vals[:, 1:, 0] = np.einsum("kab,b->ka", b, xi)
    vals[:, 1:, 1:] = b
    return OperatorMap(src, vals)


class NotImplementable(RuntimeError):
    """No implementing vector within tolerance: for a genuine chi-structure
    map this contradicts the innerness theorem, so it flags numerics."""


def implement_chi_structure(phi, chi, relation_tol=1e-8, tol=1e-9):
    """Recover (pi, xi, lambda) implementing a chi-structure map.

    Blocks are read off phi, pi = nu + chi(.) I is validated, xi solves the
    inner-derivation system delta(a) = nu(a) |xi>, and lambda is checked
    against <xi, nu(.) xi> through the reassembled map.  Returns
    (pi, xi, lam, residuals) where residuals includes the full entrywise
    reassembly defect.
    """
    rel = check_chi_structure(phi, chi)
    if rel > relation_tol:
        raise ValueError(f"not a chi-structure map (relation residual {rel:.2e})")
    src = phi.source
    n = phi.p - 1
    cv = chi.as_vector()
    lam = OperatorMap(src, phi.values[:, 0, 0])
    delta_vals = phi.values[:, 1:, 0]
    nu_vals = phi.values[:, 1:, 1:]
    pi = OperatorMap(src, nu_vals + cv[:, None, None] * np.eye(n)[None, :, :])
    rep_defect = representation_defect(pi)
    amat = nu_vals.reshape(-1, n)
    bvec = delta_vals.reshape(-1)
    xi = lstsq_minnorm(amat, bvec)
    delta_res = maxabs(amat @ xi - bvec)
    rebuilt = implemented_chi_structure(pi, chi, xi)
    reassembly = maxabs(rebuilt.values - phi.values)
    lam1 = complex(lam.as_vector() @ src.unit)
    delta1 = np.einsum("k,ka->a", src.unit, delta_vals)
    lam_at_one = abs(lam1 + complex(np.vdot(delta1, delta1)))
    residuals = {"relation": rel, "representation": rep_defect,
                 "xi_fit": delta_res, "reassembly": reassembly,
                 "lambda_at_one": lam_at_one}
    if delta_res > tol or reassembly > max(tol, 1e-10):
        raise NotImplementable(f"implementation residuals {residuals}")
    return pi, xi, lam, residuals
