"""Group-cocycle generators, the classical Monte Carlo cross-check, and
machine-readable report batteries.

Generators of *-homomorphic cocycles on a group algebra are in bijection
with triples (lambda, xi, U): a unitary representation U on the noise space,
a U-1-cocycle xi and a real phase part lambda, assembled into the block map

    psi_g = [[i lambda_g - ||xi_g||^2 / 2,  -<xi_g| U_g],
             [|xi_g>,                        U_g - I   ]].

On a finite group every such cocycle is a coboundary, xi_g = U_g eta - eta,
and :func:`solve_coboundary` recovers eta by least squares.

The Monte Carlo oracle samples the compound Poisson law on a finite group
(Poisson number of iid jumps) with a counter-based RNG, so runs are exactly
reproducible from the 64-bit seed recorded in every report.
"""

import json
from dataclasses import dataclass

import numpy as np

from . import fixtures
from .algebra import build_group_algebra
from .cocycle import Generator, StepFunction, check_cocycle_identity
from .convolution import ConvolutionSemigroup, OperatorMap, functional
from .derivations import DerivationProblem, inner_derivation, solve_inner
from .generators import check_structure_map, gns_construct, make_structure_map
from .linalg import dagger, maxabs


# -- group cocycle data ----------------------------------------------------------

@dataclass
class GroupCocycleData:
    """(table, U, xi, lambda) describing psi_g on a finite group."""

    table: np.ndarray        # group Cayley table, identity index 0
    unitaries: np.ndarray    # (|G|, d_noise, d_noise)
    xi: np.ndarray           # (|G|, d_noise)
    lam: np.ndarray          # (|G|,) real

    def __post_init__(self):
        self.table = np.asarray(self.table, dtype=int)
        self.unitaries = np.asarray(self.unitaries, dtype=complex)
        self.xi = np.asarray(self.xi, dtype=complex)
        self.lam = np.asarray(self.lam, dtype=float)

    @property
    def order(self):
        return self.table.shape[0]

    @property
    def d_noise(self):
        return self.unitaries.shape[1]

    def residuals(self):
        n = self.order
        u, xi, lam = self.unitaries, self.xi, self.lam
        eye = np.eye(self.d_noise)
        out = {"unitary": maxabs(u @ dagger(u) - eye[None, :, :])}
        rep = max(maxabs(u[self.table[g, h]] - u[g] @ u[h])
                  for g in range(n) for h in range(n))
        out["representation"] = rep
        coc = max(maxabs(xi[self.table[g, h]] - xi[g] - u[g] @ xi[h])
                  for g in range(n) for h in range(n))
        out["xi_cocycle"] = coc
        phase = max(abs(lam[self.table[g, h]] - lam[g] - lam[h]
                        + np.vdot(xi[g], u[g] @ xi[h]).imag)
                    for g in range(n) for h in range(n))
        out["lambda_relation"] = phase
        return out

    def validate(self, tol=1e-10):
        res = self.residuals()
        bad = {k: v for k, v in res.items() if v > tol}
        if bad:
            raise ValueError(f"invalid group cocycle data: {bad}")
        return self


def coboundary_data(table, unitaries, eta):
    """Data built from a vector: xi_g = U_g eta - eta, lambda_g = Im<eta, U_g eta>."""
    unitaries = np.asarray(unitaries, dtype=complex)
    eta = np.asarray(eta, dtype=complex).reshape(-1)
    xi = np.einsum("gab,b->ga", unitaries, eta) - eta[None, :]
    lam = np.array([np.vdot(eta, unitaries[g] @ eta).imag
                    for g in range(len(unitaries))])
    return GroupCocycleData(table, unitaries, xi, lam)


def psi_blocks(data):
    """The block matrices psi_g of the corresponding generator."""
    n = data.order
    k = data.d_noise
    out = np.zeros((n, 1 + k, 1 + k), dtype=complex)
    for g in range(n):
        xg, ug = data.xi[g], data.unitaries[g]
        out[g, 0, 0] = 1j * data.lam[g] - 0.5 * np.vdot(xg, xg).real
        out[g, 0, 1:] = -np.conjugate(xg) @ ug
        out[g, 1:, 0] = xg
        out[g, 1:, 1:] = ug - np.eye(k)
    return out


def group_relation_residuals(psi, table):
    """Residuals of psi_{gh} = psi_g + psi_h + psi_g Delta_QS psi_h,
    psi_g^dag = psi_{g^{-1}}, psi_e = 0."""
    n = len(table)
    k = psi.shape[1] - 1
    dqs = np.eye(1 + k, dtype=complex)
    dqs[0, 0] = 0.0
    inv = np.argmax(np.asarray(table) == 0, axis=1)
    mult = max(maxabs(psi[table[g][h]] - psi[g] - psi[h] - psi[g] @ dqs @ psi[h])
               for g in range(n) for h in range(n))
    adj = max(maxabs(dagger(psi[g]) - psi[inv[g]]) for g in range(n))
    return {"multiplicative": mult, "adjoint": adj, "at_identity": maxabs(psi[0])}


def build_group_generator(data, algebra=None):
    """The stochastic generator phi(L_g) = psi_g on the group bialgebra.

    Validates the cocycle data and the assembled relations (residuals must
    stay below 1e-10)."""
    data.validate()
    if algebra is None:
        algebra = build_group_algebra(data.table)
    psi = psi_blocks(data)
    res = group_relation_residuals(psi, data.table)
    bad = {k: v for k, v in res.items() if v > 1e-10}
    if bad:
        raise ValueError(f"assembled generator violates the group relations: {bad}")
    return Generator(algebra, psi)


def solve_coboundary(data, tol=1e-8):
    """Least-squares eta with xi_g = U_g eta - eta and lambda_g = Im<eta, U_g eta>.

    Returns (eta, residuals); eta is None when no vector satisfies both
    conditions within ``tol`` (the residuals still report the best fit).
    """
    n = data.order
    k = data.d_noise
    rows = np.concatenate([data.unitaries[g] - np.eye(k) for g in range(n)], axis=0)
    rhs = data.xi.reshape(-1)
    eta, *_ = np.linalg.lstsq(rows, rhs, rcond=1e-12)
    xi_res = maxabs(rows @ eta - rhs)
    lam_res = max(abs(data.lam[g] - np.vdot(eta, data.unitaries[g] @ eta).imag)
                  for g in range(n))
    residuals = {"xi": xi_res, "lambda": lam_res}
    if max(xi_res, lam_res) > tol:
        return None, residuals
    return eta, residuals


# -- compound Poisson Monte Carlo -------------------------------------------------

def _poisson_counts(rng, rate_t, size):
    """Poisson sampling: CDF inversion for rate_t <= 30, rounded-normal
    approximation above (reproducibility contract: both paths draw exactly
    one uniform/normal block)."""
    if rate_t < 0:
        raise ValueError("rate * t must be nonnegative")
    if rate_t <= 30.0:
        cutoff = 30 + int(8 * np.sqrt(rate_t + 1.0)) + int(rate_t)
        pmf = np.zeros(cutoff)
        pmf[0] = np.exp(-rate_t)
        for i in range(1, cutoff):
            pmf[i] = pmf[i - 1] * rate_t / i
        cdf = np.cumsum(pmf)
        u = rng.random(size)
        return np.searchsorted(cdf, u)
    draws = rng.normal(loc=rate_t, scale=np.sqrt(rate_t), size=size)
    return np.maximum(np.rint(draws), 0).astype(np.int64)


@dataclass
class MonteCarloResult:
    frequencies: np.ndarray
    standard_errors: np.ndarray
    n_samples: int
    seed: int

    def to_dict(self):
        return {"frequencies": self.frequencies.tolist(),
                "standard_errors": self.standard_errors.tolist(),
                "n_samples": self.n_samples, "seed": self.seed}


def simulate_compound_poisson(table, rate, jump_measure, t, n_samples, seed):
    """Empirical law of X_t = j_1 ... j_N on the group, N ~ Poisson(rate t),
    jumps iid from ``jump_measure``."""
    table = np.asarray(table, dtype=int)
    mu = np.asarray(jump_measure, dtype=float)
    if mu.ndim != 1 or mu.size != table.shape[0] or np.any(mu < 0) \
            or abs(mu.sum() - 1.0) > 1e-12:
        raise ValueError("jump measure must be a probability vector on the group")
    if rate < 0:
        raise ValueError("rate must be nonnegative")
    rng = np.random.Generator(np.random.Philox(key=int(seed)))
    counts = _poisson_counts(rng, rate * t, n_samples)
    state = np.zeros(n_samples, dtype=np.int64)
    cdf = np.cumsum(mu)
    for round_idx in range(int(counts.max()) if n_samples else 0):
        active = counts > round_idx
        n_active = int(active.sum())
        if n_active == 0:
            break
        jumps = np.searchsorted(cdf, rng.random(n_active))
        state[active] = table[state[active], jumps]
    freqs = np.bincount(state, minlength=table.shape[0]) / max(1, n_samples)
    ses = np.sqrt(freqs * (1.0 - freqs) / max(1, n_samples))
    return MonteCarloResult(freqs, ses, n_samples, int(seed))


def compound_poisson_law(function_algebra, rate, jump_measure, t):
    """Exact law via the convolution exponential of rate (mu-hat - eps) on
    the function bialgebra: the vector of lambda_t(delta_h)."""
    mu = np.asarray(jump_measure, dtype=complex)
    gamma = functional(function_algebra, rate * (mu - function_algebra.counit))
    return ConvolutionSemigroup(gamma).at(t).as_vector().real


# -- report batteries --------------------------------------------------------------

@dataclass
class RunConfig:
    seed: int = 7
    tol: float = 1e-9
    n_samples: int = 10000
    t_grid: tuple = (0.25, 0.5, 1.0)
    out: str = None

    def __post_init__(self):
        if self.n_samples <= 0:
            raise ValueError("sample count must be positive")

    def to_dict(self):
        return {"seed": int(self.seed), "tol": float(self.tol),
                "n_samples": int(self.n_samples),
                "t_grid": [float(t) for t in self.t_grid]}


def _case(name, residual, tol):
    return {"name": name, "residual": float(residual), "tol": float(tol),
            "pass": bool(residual <= tol)}


def _battery_axioms(config):
    from .algebra import validate_bialgebra
    cases = []
    for name, b in fixtures.bundled_fixtures().items():
        for r in validate_bialgebra(b):
            cases.append(_case(f"{name}:{r.name}", r.residual, r.tol))
    return cases


def _random_generator(rng, src, d_noise, scale=0.4):
    shape = (src.dim, 1 + d_noise, 1 + d_noise)
    vals = scale * (rng.standard_normal(shape) + 1j * rng.standard_normal(shape))
    return Generator(src, vals)


def _battery_cocycle(config):
    rng = np.random.default_rng(config.seed)
    cases = []
    for name, b in fixtures.bundled_fixtures().items():
        for rep in range(10):
            dn = int(rng.integers(1, 3))
            phi = _random_generator(rng, b, dn)
            s, t = float(rng.uniform(0.05, 0.8)), float(rng.uniform(0.05, 0.8))
            f = _random_step(rng, dn, s + t)
            fp = _random_step(rng, dn, s + t)
            res = check_cocycle_identity(phi, s, t, f, fp)
            cases.append(_case(f"{name}:qscc[{rep}]", res, config.tol))
    return cases


def _random_step(rng, d_noise, horizon, max_pieces=3):
    m = int(rng.integers(1, max_pieces + 1))
    cuts = np.sort(rng.uniform(0.05 * horizon, 0.95 * horizon, size=m - 1))
    bp = np.concatenate([[0.0], cuts, [horizon]])
    vals = 0.7 * (rng.standard_normal((m, d_noise))
                  + 1j * rng.standard_normal((m, d_noise)))
    return StepFunction(bp, vals)


def _battery_gns(config):
    rng = np.random.default_rng(config.seed)
    cases = []
    for name, b in fixtures.bundled_fixtures().items():
        if b.kind != "bialgebra":
            continue
        pi = OperatorMap(b, b.rep_images)
        c = rng.standard_normal(b.rep_dim) + 1j * rng.standard_normal(b.rep_dim)
        phi = make_structure_map(pi, c)
        cases.append(_case(f"{name}:structure",
                           max(check_structure_map(phi).values()), 1e-12))
        triple, phi2 = gns_construct(phi.lam_block())
        cases.append(_case(f"{name}:triple", triple.max_residual(), 1e-9))
        sg1 = ConvolutionSemigroup(phi.lam_block())
        sg2 = ConvolutionSemigroup(phi2.lam_block())
        res = max(maxabs(sg1.at(t).as_vector() - sg2.at(t).as_vector())
                  for t in config.t_grid)
        cases.append(_case(f"{name}:vacuum-semigroup", res, 1e-9))
    return cases


def _battery_derivations(config):
    rng = np.random.default_rng(config.seed)
    cases = []
    for name, b in list(fixtures.bundled_fixtures().items())[:4]:
        pi = OperatorMap(b, b.rep_images)
        for rep in range(5):
            n = b.rep_dim
            t0 = rng.standard_normal((n, n)) + 1j * rng.standard_normal((n, n))
            problem = DerivationProblem(pi, pi, inner_derivation(pi, pi, t0))
            _, res = solve_inner(problem)
            cases.append(_case(f"{name}:inner[{rep}]", res, 1e-9))
    return cases


def _battery_montecarlo(config):
    cases = []
    for n in (2, 3, 4):
        table = fixtures.cyclic_table(n)
        b = fixtures.fixture(f"C(Z{n})")
        rng = np.random.default_rng(config.seed + n)
        mu = rng.uniform(0.1, 1.0, size=n)
        mu /= mu.sum()
        rate, t = 1.5, 0.8
        mc = simulate_compound_poisson(table, rate, mu, t, config.n_samples,
                                       config.seed + n)
        law = compound_poisson_law(b, rate, mu, t)
        worst = max((abs(mc.frequencies[h] - law[h])
                     / max(mc.standard_errors[h], 1e-12)) for h in range(n))
        tv = 0.5 * float(np.sum(np.abs(mc.frequencies - law)))
        cases.append(_case(f"C(Z{n}):pointwise-sigmas", worst, 3.0))
        cases.append(_case(f"C(Z{n}):total-variation", tv,
                           3.0 * float(mc.standard_errors.max())))
    return cases


BATTERIES = {
    "axioms": _battery_axioms,
    "cocycle": _battery_cocycle,
    "gns": _battery_gns,
    "derivations": _battery_derivations,
    "montecarlo": _battery_montecarlo,
}


def run_report(config, suite="axioms"):
    """Run a named battery and return the report dict (optionally written to
    ``config.out``).  Reports are deterministic functions of the seed."""
    if suite == "all":
        names = list(BATTERIES)
    elif suite in BATTERIES:
        names = [suite]
    else:
        raise ValueError(f"unknown battery {suite!r}; have {sorted(BATTERIES)} or 'all'")
    batteries = {}
    for name in names:
        batteries[name] = BATTERIES[name](config)
    all_cases = [c for cases in batteries.values() for c in cases]
    report = {
        "suite": suite,
        "config": config.to_dict(),
        "batteries": batteries,
        "n_cases": len(all_cases),
        "n_failures": sum(not c["pass"] for c in all_cases),
        "all_pass": all(c["pass"] for c in all_cases),
    }
    if config.out:
        with open(config.out, "w", encoding="utf-8") as fh:
            json.dump(report, fh, indent=1, sort_keys=True)
            fh.write("\n")
    return report
