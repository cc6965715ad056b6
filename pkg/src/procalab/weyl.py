"""Finite-dimensional Weyl symbols with the twisted product, states and
the norm-proxy experiments.

A Weyl combination is a finite complex span of symbols W(F) over a real
pre-symplectic space; the product twists by exp(-i sigma(F, F')/2).
States are normalized projectively positive functions; the computable
catalog below (characters times scaled exponentials of a dominating
form) gives a lower bound on the C*-norm that already certifies the
0-versus-2 gap of the dynamics-ideal obstruction.
"""

from dataclasses import dataclass

import numpy as np


class WeylError(ValueError):
    pass


# ---------------------------------------------------------------------------
# spaces


@dataclass(frozen=True)
class PreSymplecticSpace:
    """Real vector space with an antisymmetric (possibly degenerate) form."""

    sigma: tuple  # matrix as nested tuples, exact antisymmetry required

    def __post_init__(self):
        M = np.asarray(self.sigma, dtype=float)
        if M.ndim != 2 or M.shape[0] != M.shape[1]:
            raise WeylError("sigma must be square")
        if M.shape[0] > 16:
            raise WeylError("finite dimension only (<= 16)")
        if not np.array_equal(M, -M.T):
            raise WeylError("sigma must be exactly antisymmetric")

    @property
    def dimension(self):
        return len(self.sigma)

    def matrix(self):
        return np.asarray(self.sigma, dtype=float)

    def form(self, F, G):
        return float(np.asarray(F) @ self.matrix() @ np.asarray(G))


def presymplectic(matrix):
    M = np.asarray(matrix, dtype=float)
    M = 0.5 * (M - M.T)  # exact antisymmetrization in floats: a - a.T halved
    return PreSymplecticSpace(tuple(tuple(row) for row in M))


# ---------------------------------------------------------------------------
# Weyl combinations


class WeylCombination:
    """Finite map vector -> coefficient; vectors are float tuples."""

    __slots__ = ("dimension", "terms")

    def __init__(self, dimension, terms=None):
        self.dimension = int(dimension)
        self.terms = {}
        for v, z in (terms or {}).items():
            if len(v) != dimension:
                raise WeylError("vector length mismatch")
            if z != 0:
                self.terms[tuple(float(x) for x in v)] = complex(z)

    @staticmethod
    def symbol(F, z=1.0):
        F = tuple(float(x) for x in F)
        return WeylCombination(len(F), {F: z})

    @staticmethod
    def unit(dimension):
        return WeylCombination(dimension, {(0.0,) * dimension: 1.0})

    def __add__(self, other):
        self._check(other)
        out = dict(self.terms)
        for v, z in other.terms.items():
            out[v] = out.get(v, 0j) + z
        return WeylCombination(self.dimension, out)

    def __sub__(self, other):
        return self + (-1.0) * other

    def __mul__(self, z):
        return WeylCombination(self.dimension, {v: c * z for v, c in self.terms.items()})

    __rmul__ = __mul__

    def _check(self, other):
        if self.dimension != other.dimension:
            raise WeylError("combinations live on different spaces")

    def __eq__(self, other):
        if not isinstance(other, WeylCombination):
            return NotImplemented
        return self.dimension == other.dimension and self.terms == other.terms

    def is_zero(self, tol=0.0):
        return all(abs(z) <= tol for z in self.terms.values())

    def single_term(self):
        if len(self.terms) != 1:
            raise WeylError("combination is not a single symbol")
        return next(iter(self.terms.items()))

    def __repr__(self):
        return "WeylCombination(%r)" % (self.terms,)


def combination_distance(a: WeylCombination, b: WeylCombination, vec_tol=1e-9):
    """Max coefficient mismatch, pairing vectors within a float tolerance.

    Vector keys produced along different association orders differ at
    the rounding level; phase identities are compared through this.
    """
    a._check(b)
    used = set()
    worst = 0.0
    for v, z in a.terms.items():
        match = None
        for w in b.terms:
            if w not in used and max(abs(x - y) for x, y in zip(v, w)) <= vec_tol:
                match = w
                break
        if match is None:
            worst = max(worst, abs(z))
        else:
            used.add(match)
            worst = max(worst, abs(z - b.terms[match]))
    for w, z in b.terms.items():
        if w not in used:
            worst = max(worst, abs(z))
    return worst


def weyl_mul(a: WeylCombination, b: WeylCombination, space: PreSymplecticSpace) -> WeylCombination:
    """Bilinear extension of W(F) W(G) = exp(-i sigma(F,G)/2) W(F+G)."""
    a._check(b)
    if space.dimension != a.dimension:
        raise WeylError("space dimension mismatch")
    out = {}
    for F, zf in a.terms.items():
        for G, zg in b.terms.items():
            phase = np.exp(-0.5j * space.form(F, G))
            key = tuple(f + g for f, g in zip(F, G))
            out[key] = out.get(key, 0j) + zf * zg * phase
    return WeylCombination(a.dimension, out)


def weyl_star(a: WeylCombination) -> WeylCombination:
    """Involution: conjugate coefficients, negate vectors."""
    return WeylCombination(a.dimension,
                           {tuple(-x for x in v): np.conjugate(z) for v, z in a.terms.items()})


def word_phase(space, vectors):
    """Scalar attached to the ordered product of symbols W(F_1)...W(F_n)."""
    total = 0.0
    for i in range(len(vectors)):
        for k in range(i + 1, len(vectors)):
            total += space.form(vectors[i], vectors[k])
    return np.exp(-0.5j * total)


# ---------------------------------------------------------------------------
# dominating forms


def operator_norm_oracle(M, iters=400, seed=0):
    """Power iteration on M^T M; brute-force cross-check of the 2-norm."""
    M = np.asarray(M, dtype=float)
    rng = np.random.default_rng(seed)
    v = rng.standard_normal(M.shape[1])
    v /= np.linalg.norm(v)
    A = M.T @ M
    for _ in range(iters):
        v = A @ v
        nrm = np.linalg.norm(v)
        if nrm == 0:
            return 0.0
        v /= nrm
    return float(np.sqrt(v @ A @ v))


def rayleigh_grid_norm(M, points=24):
    """Exhaustive Rayleigh-quotient grid; usable up to dimension 4."""
    M = np.asarray(M, dtype=float)
    dim = M.shape[1]
    if dim > 4:
        raise WeylError("grid oracle limited to dimension <= 4")
    best = 0.0
    angles = [np.linspace(0, np.pi, points)] * (dim - 1)
    import itertools

    for combo in itertools.product(*angles):
        v = np.ones(dim)
        for i, th in enumerate(combo):
            r = np.eye(dim)
            r[i, i] = np.cos(th)
            r[(i + 1) % dim, (i + 1) % dim] = np.cos(th)
            r[i, (i + 1) % dim] = -np.sin(th)
            r[(i + 1) % dim, i] = np.sin(th)
            v = r @ v
        v /= np.linalg.norm(v)
        best = max(best, float(np.linalg.norm(M @ v)))
    return best


def dominating_form(space: PreSymplecticSpace):
    """Scaled identity s = ||Lambda|| <.,.> dominating the form.

    sigma(F,G) = <Lambda F, G> with Lambda = sigma^T; the Cauchy-Schwarz
    bound sigma(F,G)^2 <= s(F,F) s(G,G) follows from the operator norm.
    """
    M = space.matrix()
    norm = float(np.linalg.norm(M, 2))
    return norm * np.eye(space.dimension), norm


def dominates(space, s_matrix, trials=200, seed=0, tol=1e-9):
    rng = np.random.default_rng(seed)
    s = np.asarray(s_matrix, dtype=float)
    if not np.allclose(s, s.T):
        return False
    eig = np.linalg.eigvalsh(s)
    if eig.min() < -tol:
        return False
    for _ in range(trials):
        F = rng.standard_normal(space.dimension)
        G = rng.standard_normal(space.dimension)
        lhs = space.form(F, G) ** 2
        rhs = float(F @ s @ F) * float(G @ s @ G)
        if lhs > rhs * (1 + 1e-9) + tol:
            return False
    return True


# ---------------------------------------------------------------------------
# states


@dataclass
class StateFunction:
    """Normalized projectively positive function on the vector space."""

    dimension: int
    evaluator: object
    label: str = "state"

    def __call__(self, F):
        return complex(self.evaluator(tuple(float(x) for x in F)))

    def expectation(self, comb: WeylCombination):
        """Linear extension omega(W(F)) = C(F)."""
        return sum(z * self(F) for F, z in comb.terms.items())

    def positivity_matrix(self, space, vectors):
        n = len(vectors)
        M = np.zeros((n, n), dtype=complex)
        for i in range(n):
            for k in range(n):
                phase = np.exp(0.5j * space.form(vectors[i], vectors[k]))
                diff = tuple(b - a for a, b in zip(vectors[i], vectors[k]))
                M[i, k] = phase * self(diff)
        return M

    def min_positivity_eig(self, space, vectors):
        return float(np.linalg.eigvalsh(self.positivity_matrix(space, vectors)).min())


def exponential_state(space: PreSymplecticSpace, s_matrix, check=True) -> StateFunction:
    """F -> exp(-s(F,F)/2) for a dominating symmetric form s."""
    s = np.asarray(s_matrix, dtype=float)
    if check and not dominates(space, s):
        raise WeylError("form does not dominate sigma; refusing the would-be state")

    def ev(F):
        F = np.asarray(F)
        return np.exp(-0.5 * float(F @ s @ F))

    return StateFunction(space.dimension, ev, "exp")


def character_state(dimension, L) -> StateFunction:
    """F -> exp(i L . F), a state of the zero form (and a phase twist)."""
    L = np.asarray(L, dtype=float)

    def ev(F):
        return np.exp(1j * float(L @ np.asarray(F)))

    return StateFunction(dimension, ev, "char")


def product_state(a: StateFunction, b: StateFunction) -> StateFunction:
    """Pointwise product; a state for the sum of the two underlying forms."""
    if a.dimension != b.dimension:
        raise WeylError("dimension mismatch")
    return StateFunction(a.dimension, lambda F: a(F) * b(F), "%s*%s" % (a.label, b.label))


def state_catalog(space, n_characters=32, scales=(1.0, 2.0, 4.0), directions=None, seed=0):
    """Catalog of exponential states twisted by characters.

    The characters are states of the zero form, so the products remain
    states for sigma; sweeping them optimizes the phase in norm bounds.
    """
    s, _ = dominating_form(space)
    rng = np.random.default_rng(seed)
    catalog = []
    base = []
    for t in scales:
        base.append(exponential_state(space, t * s, check=False))
    dirs = []
    if directions is not None:
        for d in directions:
            d = np.asarray(d, dtype=float)
            nrm = np.linalg.norm(d)
            if nrm > 0:
                dirs.append(d / (nrm * nrm))
    for _ in range(3):
        dirs.append(rng.standard_normal(space.dimension))
    for b in base:
        catalog.append(b)
        for d in dirs:
            for c in np.linspace(0.0, 2.0 * np.pi, n_characters, endpoint=False):
                catalog.append(product_state(character_state(space.dimension, c * d), b))
    return catalog


def norm_proxy(comb: WeylCombination, space: PreSymplecticSpace, catalog):
    """Computable lower bound of the C*-norm: sup over states of sqrt omega(A*A)."""
    if comb.is_zero():
        return 0.0
    AA = weyl_mul(weyl_star(comb), comb, space)
    best = 0.0
    for state in catalog:
        val = state.expectation(AA).real
        best = max(best, val)
    return float(np.sqrt(max(best, 0.0)))


# ---------------------------------------------------------------------------
# the dynamics-ideal obstruction experiment


@dataclass
class QuotientFamilyMock:
    """Finite-dimensional stand-in for the dynamics quotient.

    quotient_map(m) is a matrix Q_m whose kernel is the mass-m ideal;
    the quotient space carries the fixed symplectic matrix omega.  The
    kernel jumps exactly at m0, which is what obstructs continuity.
    """

    dim_total: int
    dim_quotient: int
    omega: np.ndarray
    quotient_map: object  # m -> matrix (dim_quotient x dim_total)
    m0: float

    def space_at(self, m=None):
        return presymplectic(self.omega)

    def reduce(self, m, F):
        return tuple(float(x) for x in (self.quotient_map(m) @ np.asarray(F, dtype=float)))


def default_obstruction_mock(m0=1.0):
    """Three dimensions over a plane: Q_m (x,y,z) = (x + (m - m0) z, y)."""
    omega = np.array([[0.0, 1.0], [-1.0, 0.0]])

    def qmap(m):
        return np.array([[1.0, 0.0, (m - m0)], [0.0, 1.0, 0.0]])

    return QuotientFamilyMock(3, 2, omega, qmap, m0)


def dynamics_ideal_obstruction(mock: QuotientFamilyMock, F, H, masses, catalog_seed=0):
    """Norm-proxy trace of W([F]_m) - W([H]_m) across the mass grid.

    [F]_{m0} = [H]_{m0} makes the combination vanish identically there
    (exact coefficient accounting), while at every other mass the two
    symbols are distinct and the state catalog certifies a norm near 2.
    """
    space = mock.space_at()
    rows = []
    for m in masses:
        vF = mock.reduce(m, F)
        vH = mock.reduce(m, H)
        K = WeylCombination.symbol(vF) - WeylCombination.symbol(vH)
        if K.is_zero():
            proxy = 0.0
        else:
            diff = tuple(b - a for a, b in zip(vF, vH))
            catalog = state_catalog(space, directions=[diff], seed=catalog_seed)
            proxy = norm_proxy(K, space, catalog)
        rows.append({"mass": float(m), "proxy": float(proxy), "distinct": not K.is_zero()})
    return rows
