"""Bundled fixtures: group tables and the standard bialgebras built on them."""

import numpy as np

from .algebra import (Bialgebra, build_function_algebra, build_group_algebra,
                      class_hypergroup_algebra)


def cyclic_table(n):
    return np.array([[(i + j) % n for j in range(n)] for i in range(n)])


def s3_table():
    """S3 as permutations of {0,1,2}; identity first, table entry = p o q."""
    perms = [(0, 1, 2), (1, 0, 2), (2, 1, 0), (0, 2, 1), (1, 2, 0), (2, 0, 1)]
    idx = {p: i for i, p in enumerate(perms)}
    n = len(perms)
    table = np.zeros((n, n), dtype=int)
    for i, p in enumerate(perms):
        for j, q in enumerate(perms):
            table[i, j] = idx[tuple(p[q[k]] for k in range(3))]
    return table


def d4_table():
    """Dihedral group of order 8: elements r^a s^b, s r s = r^{-1}."""
    elems = [(a, b) for b in range(2) for a in range(4)]
    idx = {e: i for i, e in enumerate(elems)}
    n = len(elems)
    table = np.zeros((n, n), dtype=int)
    for i, (a, b) in enumerate(elems):
        for j, (a2, b2) in enumerate(elems):
            sign = -1 if b else 1
            table[i, j] = idx[((a + sign * a2) % 4, (b + b2) % 2)]
    return table


def two_point_hypergroup(theta):
    """Deformed two-point structure: delta_g * delta_g = theta delta_e +
    (1-theta) delta_g on the dual side.  Coassociative and counital for every
    theta; completely positive (a valid hyperbialgebra) only for 0 < theta <= 1,
    so theta > 1 exercises the Choi-matrix rejection path.  theta = 1 is C(Z2).
    """
    d = 2
    mult = np.zeros((d, d, d), dtype=complex)
    mult[0, 0, 0] = mult[1, 1, 1] = 1.0
    coproduct = np.zeros((d, d, d), dtype=complex)
    coproduct[0, 0, 0] = 1.0
    coproduct[0, 1, 1] = theta
    coproduct[1, 0, 1] = coproduct[1, 1, 0] = 1.0
    coproduct[1, 1, 1] = 1.0 - theta
    counit = np.array([1.0, 0.0], dtype=complex)
    images = np.zeros((d, d, d), dtype=complex)
    images[0, 0, 0] = images[1, 1, 1] = 1.0
    return Bialgebra(dim=d, basis_labels=("de", "dg"),
                     unit=np.ones(d, dtype=complex), mult=mult,
                     star_matrix=np.eye(d, dtype=complex), counit=counit,
                     coproduct=coproduct, rep_blocks=(1, 1), rep_images=images,
                     kind="hyperbialgebra")


_CACHE = {}


def bundled_fixtures():
    """Name -> validated Bialgebra for the whole bundled family.

    C(Z/n) for n in {2,3,4,6}, C(S3), the group algebras of the same groups,
    and the S3 conjugacy-class hyperbialgebra.
    """
    if _CACHE:
        return dict(_CACHE)
    fx = {}
    for n in (2, 3, 4, 6):
        fx[f"C(Z{n})"] = build_function_algebra(cyclic_table(n))
        fx[f"Alg(Z{n})"] = build_group_algebra(cyclic_table(n))
    fx["C(S3)"] = build_function_algebra(s3_table())
    fx["Alg(S3)"] = build_group_algebra(s3_table())
    fx["Hyper(S3-classes)"] = class_hypergroup_algebra(s3_table())
    _CACHE.update(fx)
    return dict(fx)


def fixture(name):
    return bundled_fixtures()[name]
