"""Finite-dimensional *-bialgebras given by structure tensors.

A bialgebra here is a unital *-algebra of dimension d, described relative to
a fixed basis e_0..e_{d-1} by

* a multiplication tensor  ``mult[i, j, :]`` = coordinates of e_i e_j,
* an antilinear involution  x* = star_matrix @ conj(x),
* a counit vector,  eps(x) = counit . x,
* a coproduct tensor  ``coproduct[k, i, j]`` = coefficient of e_i (x) e_j
  in Delta(e_k),
* a faithful unital *-representation by block-diagonal matrices, which acts
  as the positivity and norm oracle.

``kind`` distinguishes bialgebras (coproduct is a unital *-homomorphism)
from hyperbialgebras (coproduct only unital and completely positive; the
counit is still a character).  All axioms are checkable numerically and
:func:`validate_bialgebra` reports a residual per axiom.
"""

import hashlib
import json
from dataclasses import dataclass

import numpy as np

from .linalg import (block_diag, dagger, maxabs, min_eig_herm,
                     numerical_rank, split_blocks)

STRUCT_TOL = 1e-12
PSD_TOL = 1e-10


class ParseError(ValueError):
    """A bialgebra/operator-map file is malformed."""


class AxiomViolation(ValueError):
    """Structure tensors violate a bialgebra axiom.

    Attributes
    ----------
    axiom : str
        Name of the first failing axiom.
    residual : float
        Magnitude of the violation.
    where : tuple or None
        Offending index tuple, when meaningful.
    """

    def __init__(self, axiom, residual, where=None):
        self.axiom = axiom
        self.residual = residual
        self.where = where
        loc = f" at {where}" if where is not None else ""
        super().__init__(f"axiom {axiom!r} violated{loc}: residual {residual:.3e}")


@dataclass(frozen=True)
class Bialgebra:
    """Immutable structure-tensor description of a finite *-bialgebra."""

    dim: int
    basis_labels: tuple
    unit: np.ndarray          # (d,)   coordinates of 1
    mult: np.ndarray          # (d, d, d)   mult[i, j, :] = coords of e_i e_j
    star_matrix: np.ndarray   # (d, d)
    counit: np.ndarray        # (d,)
    coproduct: np.ndarray     # (d, d, d)   coproduct[k, i, j]
    rep_blocks: tuple         # block sizes
    rep_images: np.ndarray    # (d, N, N) assembled block-diagonal images
    kind: str = "bialgebra"   # or "hyperbialgebra"

    # -- element-level arithmetic on coordinate vectors ------------------

    @property
    def rep_dim(self):
        return int(sum(self.rep_blocks))

    def multiply_coords(self, x, y):
        return np.einsum("i,j,ijk->k", x, y, self.mult)

    def star_coords(self, x):
        return self.star_matrix @ np.conjugate(x)

    def counit_value(self, x):
        return complex(self.counit @ x)

    def coproduct_coords(self, x):
        """Coordinates of Delta(x) as a (d, d) array over e_i (x) e_j."""
        return np.einsum("k,kij->ij", x, self.coproduct)

    def represent_coords(self, x):
        return np.einsum("k,kab->ab", x, self.rep_images)

    def basis_element(self, i):
        c = np.zeros(self.dim, dtype=complex)
        c[i] = 1.0
        return Element(self, c)

    def element(self, coords):
        coords = np.asarray(coords, dtype=complex)
        if coords.shape != (self.dim,):
            raise ValueError(f"expected {self.dim} coordinates, got {coords.shape}")
        if not np.all(np.isfinite(coords)):
            raise ValueError("element coordinates must be finite")
        return Element(self, coords)

    def one(self):
        return Element(self, self.unit.copy())

    def label_index(self, label):
        try:
            return self.basis_labels.index(label)
        except ValueError:
            raise KeyError(f"unknown basis label {label!r}") from None

    # -- serialization ----------------------------------------------------

    def to_dict(self):
        return {
            "dim": self.dim,
            "basis": list(self.basis_labels),
            "unit": [_c2j(z) for z in self.unit],
            "mult": _tensor_entries_ijk(self.mult),
            "star_matrix": _mat2j(self.star_matrix),
            "counit": [_c2j(z) for z in self.counit],
            "coproduct": _coproduct_entries(self.coproduct),
            "rep": {
                "blocks": list(self.rep_blocks),
                "images": [[_mat2j(b) for b in split_blocks(img, self.rep_blocks)]
                           for img in self.rep_images],
            },
            "kind": self.kind,
        }

    def structural_hash(self):
        cached = getattr(self, "_hash_cache", None)
        if cached is None:
            payload = json.dumps(self.to_dict(), sort_keys=True, separators=(",", ":"))
            cached = hashlib.sha256(payload.encode()).hexdigest()[:16]
            object.__setattr__(self, "_hash_cache", cached)
        return cached

    def same_structure(self, other):
        return self is other or self.structural_hash() == other.structural_hash()

    def save(self, path):
        with open(path, "w", encoding="utf-8") as fh:
            json.dump(self.to_dict(), fh, indent=1)


@dataclass
class Element:
    """An element of a :class:`Bialgebra`, stored by basis coordinates."""

    algebra: Bialgebra
    coords: np.ndarray

    def __mul__(self, other):
        _same_algebra(self, other)
        return Element(self.algebra, self.algebra.multiply_coords(self.coords, other.coords))

    def __add__(self, other):
        _same_algebra(self, other)
        return Element(self.algebra, self.coords + other.coords)

    def __sub__(self, other):
        _same_algebra(self, other)
        return Element(self.algebra, self.coords - other.coords)

    def __rmul__(self, scalar):
        return Element(self.algebra, complex(scalar) * self.coords)

    def star(self):
        return Element(self.algebra, self.algebra.star_coords(self.coords))


def _same_algebra(x, y):
    if not x.algebra.same_structure(y.algebra):
        raise ValueError("elements belong to different bialgebras")


# -- spec operations -------------------------------------------------------

def multiply(x, y):
    return x * y


def star(x):
    return x.star()


def represent(x):
    """Image of x under the faithful block-matrix representation."""
    return x.algebra.represent_coords(x.coords)


def is_positive(x, tol=PSD_TOL):
    """x >= 0 iff rho0(x) is self-adjoint with spectrum above -tol."""
    m = represent(x)
    if maxabs(m - dagger(m)) > 1e-9 * max(1.0, maxabs(m)):
        return False
    return min_eig_herm(m) >= -tol


# -- axiom validation -------------------------------------------------------

@dataclass
class AxiomResult:
    name: str
    residual: float
    tol: float
    where: tuple = None

    @property
    def passed(self):
        return self.residual <= self.tol


def _argmax_idx(t):
    t = np.abs(np.asarray(t))
    return tuple(int(i) for i in np.unravel_index(np.argmax(t), t.shape))


def validate_bialgebra(b, struct_tol=STRUCT_TOL, psd_tol=PSD_TOL):
    """Run every bialgebra axiom; returns a list of :class:`AxiomResult`.

    Structural identities use ``struct_tol``; spectral positivity (the Choi
    matrix of the represented coproduct, hyperbialgebra case) uses
    ``psd_tol``.
    """
    d = b.dim
    res = []
    eye = np.eye(d)

    unit_l = np.einsum("i,ijk->jk", b.unit, b.mult)
    unit_r = np.einsum("j,ijk->ik", b.unit, b.mult)
    t = np.stack([unit_l - eye, unit_r - eye])
    res.append(AxiomResult("unit", maxabs(t), struct_tol, _argmax_idx(t)[1:]))

    lhs = np.einsum("ijm,mkl->ijkl", b.mult, b.mult)
    rhs = np.einsum("jkm,iml->ijkl", b.mult, b.mult)
    res.append(AxiomResult("associativity", maxabs(lhs - rhs), struct_tol,
                           _argmax_idx(lhs - rhs)[:3]))

    s = b.star_matrix
    res.append(AxiomResult("star-involution", maxabs(s @ np.conjugate(s) - eye), struct_tol))

    # star(e_i e_j) = star(e_j) star(e_i)
    lhs = np.einsum("ak,ijk->ija", s, np.conjugate(b.mult))
    rhs = np.einsum("pj,qi,pqa->ija", s, s, b.mult)
    res.append(AxiomResult("star-antimultiplicative", maxabs(lhs - rhs), struct_tol))

    lhs = np.einsum("kij,iab->kabj", b.coproduct, b.coproduct)
    rhs = np.einsum("kij,jab->kiab", b.coproduct, b.coproduct)
    res.append(AxiomResult("OSC1-coassociativity", maxabs(lhs - rhs), struct_tol,
                           (_argmax_idx(lhs - rhs)[0],)))

    left = np.einsum("kij,i->kj", b.coproduct, b.counit) - eye
    right = np.einsum("kij,j->ki", b.coproduct, b.counit) - eye
    t = np.stack([left, right])
    res.append(AxiomResult("OSC2-counit-property", maxabs(t), struct_tol))

    char = np.einsum("ijk,k->ij", b.mult, b.counit) - np.outer(b.counit, b.counit)
    star_eps = s.T @ b.counit - np.conjugate(b.counit)
    at_one = abs(b.counit @ b.unit - 1.0)
    res.append(AxiomResult("counit-character",
                           max(maxabs(char), maxabs(star_eps), at_one), struct_tol))

    delta_unit = np.einsum("k,kij->ij", b.unit, b.coproduct) - np.outer(b.unit, b.unit)
    res.append(AxiomResult("coproduct-unital", maxabs(delta_unit), struct_tol))

    if b.kind == "bialgebra":
        lhs = np.einsum("ijm,mab->ijab", b.mult, b.coproduct)
        rhs = np.einsum("ipq,jrs,pra,qsb->ijab", b.coproduct, b.coproduct, b.mult, b.mult)
        res.append(AxiomResult("coproduct-multiplicative", maxabs(lhs - rhs), struct_tol,
                               _argmax_idx(lhs - rhs)[:2]))
        lhs = np.einsum("mk,mab->kab", s, b.coproduct)
        rhs = np.einsum("kij,ai,bj->kab", np.conjugate(b.coproduct), s, s)
        res.append(AxiomResult("coproduct-star-preserving", maxabs(lhs - rhs), struct_tol))
    elif b.kind == "hyperbialgebra":
        defect = max(0.0, -_coproduct_choi_min_eig(b))
        res.append(AxiomResult("coproduct-completely-positive", defect, psd_tol))
    else:
        res.append(AxiomResult("kind", 1.0, 0.0))

    rep_res, rank = _representation_residual(b)
    res.append(AxiomResult("representation", rep_res, struct_tol))
    res.append(AxiomResult("representation-faithful", float(b.dim - rank), 0.5))
    return res


def assert_valid(b, struct_tol=STRUCT_TOL, psd_tol=PSD_TOL):
    """Raise :class:`AxiomViolation` naming the first failing axiom."""
    for r in validate_bialgebra(b, struct_tol, psd_tol):
        if not r.passed:
            raise AxiomViolation(r.name, r.residual, r.where)
    return b


def _representation_residual(b):
    imgs = b.rep_images
    eyeN = np.eye(b.rep_dim)
    unital = maxabs(np.einsum("k,kab->ab", b.unit, imgs) - eyeN)
    mult = maxabs(np.einsum("iab,jbc->ijac", imgs, imgs)
                  - np.einsum("ijk,kac->ijac", b.mult, imgs))
    starp = maxabs(np.einsum("mk,mab->kab", b.star_matrix, imgs) - dagger(imgs))
    flat = imgs.reshape(b.dim, -1)
    rank = numerical_rank(flat, rtol=1e-10)
    return max(unital, mult, starp), rank


def _coproduct_choi_min_eig(b):
    """Choi-matrix minimum eigenvalue of the represented coproduct.

    The coproduct is lifted to a map on the full matrix algebra M_N by
    precomposing with the block-diagonal conditional expectation onto the
    image of the representation (finite-dimensional C*-algebras are
    multi-matrix algebras, so this is a faithful extension for CP purposes).
    """
    N = b.rep_dim
    flat = b.rep_images.reshape(b.dim, -1)           # coords -> vec(rho(x))
    pinv = np.linalg.pinv(flat, rcond=1e-12)          # vec(matrix) -> coords
    # images of Delta(e_k) in the doubled representation
    dimg = np.einsum("kij,iab,jcd->kacbd", b.coproduct, b.rep_images,
                     b.rep_images).reshape(b.dim, N * N, N * N)
    choi = np.zeros((N * N * N, N * N * N), dtype=complex)
    for u in range(N):
        for v in range(N):
            euv = np.zeros((N, N), dtype=complex)
            # conditional expectation: keep only the block-diagonal part
            if _same_block(b.rep_blocks, u, v):
                euv[u, v] = 1.0
            coords = pinv.T @ euv.reshape(-1)
            theta = np.einsum("k,kab->ab", coords, dimg)
            base = np.zeros((N, N), dtype=complex)
            base[u, v] = 1.0
            choi += np.kron(base, theta)
    return min_eig_herm(choi)


def _same_block(sizes, u, v):
    ofs = 0
    for k in sizes:
        if ofs <= u < ofs + k:
            return ofs <= v < ofs + k
        ofs += k
    return False


# -- builders ---------------------------------------------------------------

def _check_table(table, need_group):
    table = np.asarray(table, dtype=int)
    d = table.shape[0]
    if table.shape != (d, d) or np.any(table < 0) or np.any(table >= d):
        raise ValueError("multiplication table must be square over 0..d-1")
    if not (np.array_equal(table[0], np.arange(d)) and np.array_equal(table[:, 0], np.arange(d))):
        raise ValueError("index 0 is not an identity for the table")
    for i in range(d):
        for j in range(d):
            for k in range(d):
                if table[table[i, j], k] != table[i, table[j, k]]:
                    raise ValueError(f"table is not associative at ({i},{j},{k})")
    if need_group:
        for i in range(d):
            if not np.any(table[i] == 0):
                raise ValueError(f"element {i} has no inverse; table is not a group")
    return table


def build_function_algebra(cayley_table, labels=None):
    """C(H) for a finite monoid H: pointwise products of delta functions.

    The coproduct is dual to the monoid multiplication,
    Delta(F)(h, h') = F(h h'), and the counit evaluates at the identity.
    """
    table = _check_table(cayley_table, need_group=False)
    d = table.shape[0]
    if labels is None:
        labels = tuple(f"d{h}" for h in range(d))
    mult = np.zeros((d, d, d), dtype=complex)
    for i in range(d):
        mult[i, i, i] = 1.0
    coproduct = np.zeros((d, d, d), dtype=complex)
    for a in range(d):
        for c in range(d):
            coproduct[table[a, c], a, c] = 1.0
    counit = np.zeros(d, dtype=complex)
    counit[0] = 1.0
    images = np.zeros((d, d, d), dtype=complex)
    for i in range(d):
        images[i, i, i] = 1.0
    b = Bialgebra(dim=d, basis_labels=tuple(labels),
                  unit=np.ones(d, dtype=complex), mult=mult,
                  star_matrix=np.eye(d, dtype=complex), counit=counit,
                  coproduct=coproduct, rep_blocks=(1,) * d, rep_images=images,
                  kind="bialgebra")
    return assert_valid(b)


def build_group_algebra(cayley_table, labels=None):
    """Group *-bialgebra C[G] on the basis {L_g}.

    Delta(L_g) = L_g (x) L_g, eps(L_g) = 1, L_g* = L_{g^{-1}}; the faithful
    representation is one copy of each irreducible representation, found by
    numerically splitting the regular representation.
    """
    table = _check_table(cayley_table, need_group=True)
    d = table.shape[0]
    if labels is None:
        labels = tuple(f"L{g}" for g in range(d))
    mult = np.zeros((d, d, d), dtype=complex)
    for i in range(d):
        for j in range(d):
            mult[i, j, table[i, j]] = 1.0
    inv = np.argmax(table == 0, axis=1)
    star_m = np.zeros((d, d), dtype=complex)
    for g in range(d):
        star_m[inv[g], g] = 1.0
    coproduct = np.zeros((d, d, d), dtype=complex)
    for g in range(d):
        coproduct[g, g, g] = 1.0
    unit = np.zeros(d, dtype=complex)
    unit[0] = 1.0
    blocks, images = _group_irreps(table)
    b = Bialgebra(dim=d, basis_labels=tuple(labels), unit=unit, mult=mult,
                  star_matrix=star_m, counit=np.ones(d, dtype=complex),
                  coproduct=coproduct, rep_blocks=tuple(blocks),
                  rep_images=np.array(images), kind="bialgebra")
    return assert_valid(b)


def _group_irreps(table, seeds=(12345, 54321, 777)):
    """One unitary irrep per equivalence class, from the regular representation.

    A random Hermitian element of the commutant of the left regular
    representation is generically nondegenerate within each multiplicity
    factor; its eigenspaces carry single copies of the irreps.
    """
    d = table.shape[0]
    regs = np.zeros((d, d, d), dtype=complex)
    for g in range(d):
        for h in range(d):
            regs[g, table[g, h], h] = 1.0
    last_err = None
    for seed in seeds:
        rng = np.random.default_rng(seed)
        a = rng.standard_normal((d, d)) + 1j * rng.standard_normal((d, d))
        a = a + a.conj().T
        x = sum(regs[g] @ a @ dagger(regs[g]) for g in range(d)) / d
        vals, vecs = np.linalg.eigh(x)
        groups, start = [], 0
        for i in range(1, d + 1):
            if i == d or vals[i] - vals[i - 1] > 1e-6 * max(1.0, abs(vals[i])):
                groups.append(slice(start, i))
                start = i
        reps = {}
        for sl in groups:
            v = vecs[:, sl]
            pi = np.array([dagger(v) @ regs[g] @ v for g in range(d)])
            char = tuple(np.round(np.trace(pi[g]), 8) for g in range(d))
            reps.setdefault(char, pi)
        chosen = sorted(reps.items(),
                        key=lambda kv: (kv[1].shape[1],
                                        [(-z.real, -z.imag) for z in kv[0]]))
        blocks = [pi.shape[1] for _, pi in chosen]
        if sum(n * n for n in blocks) != d:
            last_err = f"block sizes {blocks} inconsistent with |G|={d}"
            continue
        images = [block_diag([pi[g] for _, pi in chosen]) for g in range(d)]
        resid = maxabs(np.array([images[table[g, h]] - images[g] @ images[h]
                                 for g in range(d) for h in range(d)]))
        if resid < 1e-10:
            return blocks, images
        last_err = f"representation residual {resid:.2e}"
    raise RuntimeError(f"irrep decomposition failed: {last_err}")


def class_hypergroup_algebra(cayley_table, labels=None):
    """Conjugacy-class hypergroup of a finite group, as a C*-hyperbialgebra.

    Functions on the class set with pointwise product; the coproduct carries
    the class-convolution transition probabilities, which is unital and
    completely positive but not multiplicative once the group is nonabelian.
    """
    table = _check_table(cayley_table, need_group=True)
    d = table.shape[0]
    inv = np.argmax(table == 0, axis=1)
    cls = [-1] * d
    classes = []
    for g in range(d):
        if cls[g] >= 0:
            continue
        orbit = sorted({table[table[h, g], inv[h]] for h in range(d)})
        for x in orbit:
            cls[x] = len(classes)
        classes.append(orbit)
    m = len(classes)
    if labels is None:
        labels = tuple("C" + "_".join(str(x) for x in c) for c in classes)
    coproduct = np.zeros((m, m, m), dtype=complex)
    for i, ci in enumerate(classes):
        for j, cj in enumerate(classes):
            w = 1.0 / (len(ci) * len(cj))
            for a in ci:
                for bb in cj:
                    coproduct[cls[table[a, bb]], i, j] += w
    mult = np.zeros((m, m, m), dtype=complex)
    for i in range(m):
        mult[i, i, i] = 1.0
    counit = np.zeros(m, dtype=complex)
    counit[0] = 1.0
    images = np.zeros((m, m, m), dtype=complex)
    for i in range(m):
        images[i, i, i] = 1.0
    b = Bialgebra(dim=m, basis_labels=labels, unit=np.ones(m, dtype=complex),
                  mult=mult, star_matrix=np.eye(m, dtype=complex),
                  counit=counit, coproduct=coproduct, rep_blocks=(1,) * m,
                  rep_images=images, kind="hyperbialgebra")
    return assert_valid(b)


# -- JSON format -------------------------------------------------------------

def _c2j(z):
    z = complex(z)
    return [z.real, z.imag]


def _j2c(pair):
    if not (isinstance(pair, (list, tuple)) and len(pair) == 2):
        raise ParseError(f"expected [re, im] pair, got {pair!r}")
    return complex(pair[0], pair[1])


def _mat2j(m):
    return [[_c2j(z) for z in row] for row in np.asarray(m)]


def _j2mat(rows):
    return np.array([[_j2c(z) for z in row] for row in rows], dtype=complex)


def _tensor_entries_ijk(t):
    out = []
    for (i, j, k), v in np.ndenumerate(t):
        if v != 0:
            out.append({"i": int(i), "j": int(j), "k": int(k),
                        "re": v.real, "im": v.imag})
    return out


def _coproduct_entries(t):
    # coproduct[k, i, j]: entry keys follow the tensor-basis convention
    # {i, j, k} = coefficient of e_i (x) e_j in Delta(e_k)
    out = []
    for (k, i, j), v in np.ndenumerate(t):
        if v != 0:
            out.append({"i": int(i), "j": int(j), "k": int(k),
                        "re": v.real, "im": v.imag})
    return out


def bialgebra_from_dict(data):
    try:
        d = int(data["dim"])
        labels = tuple(str(x) for x in data["basis"])
        unit = np.array([_j2c(z) for z in data["unit"]], dtype=complex)
        counit = np.array([_j2c(z) for z in data["counit"]], dtype=complex)
        star_m = _j2mat(data["star_matrix"])
        mult = np.zeros((d, d, d), dtype=complex)
        for e in data["mult"]:
            mult[e["i"], e["j"], e["k"]] += complex(e["re"], e["im"])
        coproduct = np.zeros((d, d, d), dtype=complex)
        for e in data["coproduct"]:
            coproduct[e["k"], e["i"], e["j"]] += complex(e["re"], e["im"])
        blocks = tuple(int(n) for n in data["rep"]["blocks"])
        images = np.array([block_diag([_j2mat(bm) for bm in per_basis])
                           for per_basis in data["rep"]["images"]])
        kind = data.get("kind", "bialgebra")
    except (KeyError, TypeError, IndexError, ValueError) as exc:
        raise ParseError(f"malformed bialgebra file: {exc}") from exc
    if len(labels) != d or unit.shape != (d,) or counit.shape != (d,):
        raise ParseError("field sizes inconsistent with dim")
    if star_m.shape != (d, d) or images.shape[0] != d:
        raise ParseError("matrix sizes inconsistent with dim")
    n = sum(blocks)
    if images.shape[1:] != (n, n):
        raise ParseError("representation images inconsistent with block sizes")
    return Bialgebra(dim=d, basis_labels=labels, unit=unit, mult=mult,
                     star_matrix=star_m, counit=counit, coproduct=coproduct,
                     rep_blocks=blocks, rep_images=images, kind=kind)


def load_bialgebra(path, struct_tol=STRUCT_TOL, psd_tol=PSD_TOL):
    """Parse and fully validate a bialgebra file.

    Raises :class:`ParseError` on malformed input and :class:`AxiomViolation`
    naming the first failing axiom otherwise.  An optional "rep2" field (same
    schema as "rep") is validated as a second faithful representation: the
    spectral checks are repeated in it, which samples representation
    independence of the CP verdict.
    """
    try:
        with open(path, encoding="utf-8") as fh:
            data = json.load(fh)
    except json.JSONDecodeError as exc:
        raise ParseError(f"invalid JSON in {path}: {exc}") from exc
    b = bialgebra_from_dict(data)
    assert_valid(b, struct_tol, psd_tol)
    if "rep2" in data:
        alt = dict(data)
        alt["rep"] = data["rep2"]
        del alt["rep2"]
        assert_valid(bialgebra_from_dict(alt), struct_tol, psd_tol)
    return b
