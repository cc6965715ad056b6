"""Differential forms on rectangular lattices with diagonal metrics.

Components are stored for strictly increasing multi-indices only; the
full antisymmetric tensor is recovered by permutation signs.  Derivative
stencils are the adjoint pair of one-sided differences: the exterior
derivative uses forward differences, the interior derivative backward
ones.  Both are nilpotent to rounding (translations commute exactly) and
exactly adjoint under the lattice pairing, and their anticommutator is
the compact second-difference wave operator acting componentwise.
"""

import io
import itertools

import numpy as np

from .lattice import Geometry, CauchySlice


class FormError(ValueError):
    pass


# ---------------------------------------------------------------------------
# index combinatorics


def _perm_sign(seq):
    """Sign of the permutation sorting ``seq``; 0 on repeated entries."""
    seq = list(seq)
    n = len(seq)
    if len(set(seq)) != n:
        return 0
    sign = 1
    for i in range(n):
        for j in range(i + 1, n):
            if seq[i] > seq[j]:
                sign = -sign
    return sign


def combos(n_axes, degree):
    return list(itertools.combinations(range(n_axes), degree))


def combo_index(n_axes, degree):
    return {c: i for i, c in enumerate(combos(n_axes, degree))}


def epsilon_symbol(n):
    """Dense Levi-Civita symbol of rank n with eps[0,1,...,n-1] = 1."""
    eps = np.zeros((n,) * n, dtype=np.int64)
    for perm in itertools.permutations(range(n)):
        eps[perm] = _perm_sign(perm)
    return eps


class LeviCivita:
    """Levi-Civita symbol bundled with the metric signature count.

    Contracting j index pairs of eps with eps (one raised through the
    metric) yields (-1)^s (N-j)! j! times the antisymmetrized identity on
    the remaining slots; `contraction` computes the left side exactly in
    integers for unit-magnitude diagonal metrics.
    """

    def __init__(self, dimension, signature_negatives):
        self.dimension = int(dimension)
        self.signature_negatives = int(signature_negatives)

    def symbol(self):
        return epsilon_symbol(self.dimension)

    def metric_diag(self):
        n, s = self.dimension, self.signature_negatives
        return [-1] * s + [1] * (n - s)

    def contraction(self, j):
        """|det k| eps^{a..j ..} eps_{a..j ..} summed over j leading slots.

        Returns an integer array indexed by (upper free, lower free)
        multi-indices, each of length N - j.
        """
        n = self.dimension
        if not (0 <= j <= n):
            raise FormError("contraction count out of range")
        eps = self.symbol()
        g = self.metric_diag()
        det = 1
        for gv in g:
            det *= gv
        free = n - j
        out = np.zeros((n,) * (2 * free), dtype=np.int64)
        for upper in itertools.product(range(n), repeat=free):
            for lower in itertools.product(range(n), repeat=free):
                acc = 0
                for contracted in itertools.permutations(range(n), j):
                    raise_factor = 1
                    for a in contracted:
                        raise_factor *= g[a]
                    for a in upper:
                        raise_factor *= g[a]
                    acc += raise_factor * eps[contracted + upper] * eps[contracted + lower]
                out[upper + lower] = abs(det) * acc
        return out

    def contraction_expected(self, j):
        """(-1)^s (N-j)! j! delta^[..]_[..] for comparison with contraction.

        The antisymmetrized delta carries the usual 1/free! so the
        prefactor reduces to (-1)^s j! (N-j)!/free! times the plain
        alternating sum; with free = N - j that is (-1)^s j! times it.
        """
        import math

        n = self.dimension
        free = n - j
        sign = (-1) ** self.signature_negatives
        out = np.zeros((n,) * (2 * free), dtype=np.int64)
        for upper in itertools.product(range(n), repeat=free):
            for lower in itertools.product(range(n), repeat=free):
                acc = 0
                for perm in itertools.permutations(range(free)):
                    term = _perm_sign(perm)
                    for slot in range(free):
                        if upper[perm[slot]] != lower[slot]:
                            term = 0
                            break
                    acc += term
                out[upper + lower] = sign * math.factorial(j) * acc
        return out


# ---------------------------------------------------------------------------
# the form container


class DifferentialForm:
    """Degree-p antisymmetric component field over a lattice geometry.

    comps has shape (n_combos, *grid shape), complex; combo order is
    lexicographic over strictly increasing index tuples.
    """

    __slots__ = ("geometry", "degree", "comps")

    def __init__(self, geometry: Geometry, degree: int, comps=None):
        n = geometry.n_axes
        if not (0 <= degree <= n):
            raise FormError("degree %d out of range for %d axes" % (degree, n))
        self.geometry = geometry
        self.degree = int(degree)
        ncomb = len(combos(n, degree))
        if comps is None:
            comps = np.zeros((ncomb,) + tuple(geometry.shape), dtype=np.complex128)
        else:
            comps = np.asarray(comps, dtype=np.complex128)
            if comps.shape != (ncomb,) + tuple(geometry.shape):
                raise FormError("component array has shape %r, expected %r"
                                % (comps.shape, (ncomb,) + tuple(geometry.shape)))
        self.comps = comps

    # -- value semantics -----------------------------------------------------

    def copy(self):
        return DifferentialForm(self.geometry, self.degree, self.comps.copy())

    def __add__(self, other):
        self._check_same(other)
        return DifferentialForm(self.geometry, self.degree, self.comps + other.comps)

    def __sub__(self, other):
        self._check_same(other)
        return DifferentialForm(self.geometry, self.degree, self.comps - other.comps)

    def __mul__(self, z):
        return DifferentialForm(self.geometry, self.degree, self.comps * z)

    __rmul__ = __mul__

    def __neg__(self):
        return DifferentialForm(self.geometry, self.degree, -self.comps)

    def _check_same(self, other, same_degree=True):
        if self.geometry != other.geometry:
            raise FormError("forms live on different lattices")
        if same_degree and self.degree != other.degree:
            raise FormError("degree mismatch: %d vs %d" % (self.degree, other.degree))

    def max_abs(self):
        return float(np.max(np.abs(self.comps))) if self.comps.size else 0.0

    def l2(self):
        return float(np.sqrt(np.sum(np.abs(self.comps) ** 2)))

    def component(self, indices):
        """Full component for an arbitrary index tuple, with antisymmetry signs."""
        sign = _perm_sign(indices)
        if sign == 0:
            return np.zeros(tuple(self.geometry.shape), dtype=np.complex128)
        key = tuple(sorted(indices))
        idx = combo_index(self.geometry.n_axes, self.degree)[key]
        return sign * self.comps[idx]


def zero_form(geometry, degree):
    return DifferentialForm(geometry, degree)


def allclose(a, b, tol=1e-12):
    """Form equality up to the absolute tolerance tol*(1 + max magnitude)."""
    a._check_same(b)
    scale = 1.0 + max(a.max_abs(), b.max_abs())
    return float(np.max(np.abs(a.comps - b.comps))) <= tol * scale


# ---------------------------------------------------------------------------
# difference stencils


def _diff(arr, axis, spacing, flavor):
    if flavor == "forward":
        return (np.roll(arr, -1, axis=axis) - arr) / spacing
    if flavor == "backward":
        return (arr - np.roll(arr, 1, axis=axis)) / spacing
    raise FormError("unknown stencil flavor %r" % (flavor,))


# ---------------------------------------------------------------------------
# wedge product


def wedge(a: DifferentialForm, b: DifferentialForm) -> DifferentialForm:
    """Exterior product; degrees add, with the shuffle-sign convention."""
    a._check_same(b, same_degree=False)
    n = a.geometry.n_axes
    p, q = a.degree, b.degree
    if p + q > n:
        raise FormError("wedge degree %d exceeds lattice dimension %d" % (p + q, n))
    out = DifferentialForm(a.geometry, p + q)
    idx_a = combo_index(n, p)
    idx_b = combo_index(n, q)
    idx_o = combo_index(n, p + q)
    for ca in combos(n, p):
        for cb in combos(n, q):
            if set(ca) & set(cb):
                continue
            sign = _perm_sign(ca + cb)
            key = tuple(sorted(ca + cb))
            out.comps[idx_o[key]] += sign * a.comps[idx_a[ca]] * b.comps[idx_b[cb]]
    return out


# ---------------------------------------------------------------------------
# Hodge dual


def hodge(a: DifferentialForm) -> DifferentialForm:
    """Hodge dual for the diagonal metric: (*A)_J = sqrt|g| eps_{I J} A^I."""
    g = a.geometry
    n = g.n_axes
    p = a.degree
    out = DifferentialForm(g, n - p)
    idx_o = combo_index(n, n - p)
    sqrtg = g.sqrt_abs_det
    for i, ci in enumerate(combos(n, p)):
        cj = tuple(sorted(set(range(n)) - set(ci)))
        sign = _perm_sign(ci + cj)
        raise_factor = 1.0
        for mu in ci:
            raise_factor *= g.inverse_metric(mu)
        out.comps[idx_o[cj]] += sqrtg * sign * raise_factor * a.comps[i]
    return out


def hodge_inverse_sign(geometry, degree):
    """(-1)^{s + p(N-p)}, the sign of hodge(hodge(.)) on degree p."""
    n = geometry.n_axes
    s = geometry.s_negatives
    return (-1) ** (s + degree * (n - degree))


# ---------------------------------------------------------------------------
# exterior and interior derivatives


def _ext_d_flavored(a: DifferentialForm, flavor) -> DifferentialForm:
    g = a.geometry
    n = g.n_axes
    p = a.degree
    if p >= n:
        raise FormError("exterior derivative overflows top degree")
    out = DifferentialForm(g, p + 1)
    idx_o = combo_index(n, p + 1)
    for i, ci in enumerate(combos(n, p)):
        for mu in range(n):
            if mu in ci:
                continue
            key = tuple(sorted(ci + (mu,)))
            pos = key.index(mu)
            sign = (-1) ** pos
            out.comps[idx_o[key]] += sign * _diff(a.comps[i], mu, g.spacings[mu], flavor)
    return out


def ext_d(a: DifferentialForm) -> DifferentialForm:
    """Exterior derivative (forward differences)."""
    return _ext_d_flavored(a, "forward")


def int_delta(a: DifferentialForm) -> DifferentialForm:
    """Interior derivative, the sign-corrected *d* composite.

    Built from backward differences so that it is the exact adjoint of
    ext_d under the lattice pairing.  Zero-forms map to the zero form.
    """
    g = a.geometry
    n = g.n_axes
    p = a.degree
    if p == 0:
        return DifferentialForm(g, 0)
    sign = (-1) ** (g.s_negatives + 1 + n * (p - 1))
    return sign * hodge(_ext_d_flavored(hodge(a), "backward"))


def int_delta_coordinate(a: DifferentialForm) -> DifferentialForm:
    """Coordinate route -nabla^mu A_{mu ...}; must agree with int_delta."""
    g = a.geometry
    n = g.n_axes
    p = a.degree
    if p == 0:
        return DifferentialForm(g, 0)
    out = DifferentialForm(g, p - 1)
    idx_a = combo_index(n, p)
    for j, cj in enumerate(combos(n, p - 1)):
        acc = out.comps[j]
        for mu in range(n):
            if mu in cj:
                continue
            key = tuple(sorted((mu,) + cj))
            pos = key.index(mu)
            sign = (-1) ** pos
            acc -= sign * g.inverse_metric(mu) * _diff(a.comps[idx_a[key]],
                                                       mu, g.spacings[mu], "backward")
    return out


def dalembert(a: DifferentialForm) -> DifferentialForm:
    """Wave operator (interior d + exterior d anticommutator).

    On these flat product metrics it acts componentwise as the compact
    second-difference operator d_t^2 - Laplace_h.
    """
    p = a.degree
    n = a.geometry.n_axes
    parts = []
    if p < n:
        parts.append(int_delta(ext_d(a)))
    if p > 0:
        parts.append(ext_d(int_delta(a)))
    out = parts[0]
    for extra in parts[1:]:
        out = out + extra
    return out


def dalembert_componentwise(a: DifferentialForm) -> DifferentialForm:
    """Direct compact-stencil evaluation of the wave operator per component."""
    g = a.geometry
    out = a.comps.copy()
    res = np.zeros_like(out)
    for ax in range(g.n_axes):
        sp = g.spacings[ax]
        second = (np.roll(a.comps, -1, axis=ax + 1) - 2.0 * a.comps
                  + np.roll(a.comps, 1, axis=ax + 1)) / (sp * sp)
        res -= g.inverse_metric(ax) * second
    return DifferentialForm(g, a.degree, res)


# ---------------------------------------------------------------------------
# the global pairing


def _region_weights(geometry, has_time_index, slice_index, which):
    """Per-level weights cutting the window at a Cauchy slice.

    Components carrying a time index anchor half a step earlier than
    purely spatial ones, so the future region includes the slice level
    for them and starts one level later otherwise.  The future and past
    weights are complementary, making the split an exact partition.
    """
    steps = geometry.shape[0]
    w = np.zeros(steps)
    start = slice_index if has_time_index else slice_index + 1
    w[start:] = 1.0
    if which == "past":
        w = 1.0 - w
    return w


def pairing(a: DifferentialForm, b: DifferentialForm, region=None):
    """Global bilinear pairing, the Riemann sum of A wedge *B.

    region is None for the whole lattice, or a tuple ("future"|"past",
    CauchySlice) restricting the time sum to one side of the slice.
    Summation order is fixed (lexicographic sites), so results do not
    depend on any parallel schedule.
    """
    a._check_same(b)
    g = a.geometry
    n = g.n_axes
    vol = g.sqrt_abs_det * g.cell_volume
    total = 0.0 + 0.0j
    slice_obj = None
    which = None
    if region is not None:
        which, slice_obj = region
        if which not in ("future", "past"):
            raise FormError("region side must be 'future' or 'past'")
        if not isinstance(slice_obj, CauchySlice):
            raise FormError("region must name a CauchySlice")
        if g.s_negatives == 0:
            raise FormError("slice regions only apply to spacetime forms")
    for i, ci in enumerate(combos(n, a.degree)):
        raise_factor = 1.0
        for mu in ci:
            raise_factor *= g.inverse_metric(mu)
        term = a.comps[i] * b.comps[i]
        if slice_obj is not None:
            w = _region_weights(g, 0 in ci, slice_obj.time_index, which)
            term = term * w.reshape((-1,) + (1,) * (n - 1))
        total += raise_factor * term.sum()
    return complex(total * vol)


# ---------------------------------------------------------------------------
# random test forms


def _time_envelope(steps, pad):
    """Smooth bump over the window interior, identically zero on pad levels."""
    t = np.arange(steps, dtype=float)
    lo, hi = pad, steps - 1 - pad
    x = np.clip((t - lo) / max(hi - lo, 1), 0.0, 1.0)
    env = np.sin(np.pi * x) ** 2
    env[:pad + 1] = 0.0
    env[steps - pad - 1:] = 0.0
    return env


def random_form(geometry, degree, rng, time_pad=None, real=False):
    """Seeded random form; time_pad confines support inside the window."""
    shape = (len(combos(geometry.n_axes, degree)),) + tuple(geometry.shape)
    data = rng.standard_normal(shape)
    if not real:
        data = data + 1j * rng.standard_normal(shape)
    form = DifferentialForm(geometry, degree, data)
    if time_pad is not None:
        env = _time_envelope(geometry.shape[0], time_pad)
        form.comps *= env.reshape((1, -1) + (1,) * (geometry.n_axes - 1))
    return form


# ---------------------------------------------------------------------------
# serialization: header plus components in lexicographic site-then-index order


def to_bytes(form: DifferentialForm) -> bytes:
    buf = io.BytesIO()
    head = "procaform %d %d %s\n" % (
        form.degree,
        form.geometry.n_axes,
        " ".join(str(s) for s in form.geometry.shape),
    )
    buf.write(head.encode())
    moved = np.moveaxis(form.comps, 0, -1)  # site-major, combo-minor
    buf.write(np.ascontiguousarray(moved).tobytes())
    return buf.getvalue()


def from_bytes(geometry: Geometry, payload: bytes) -> DifferentialForm:
    nl = payload.index(b"\n")
    head = payload[:nl].decode().split()
    if head[0] != "procaform":
        raise FormError("bad form header")
    degree = int(head[1])
    shape = tuple(int(x) for x in head[3:])
    if shape != tuple(geometry.shape):
        raise FormError("serialized shape %r does not match geometry %r" % (shape, tuple(geometry.shape)))
    ncomb = len(combos(geometry.n_axes, degree))
    flat = np.frombuffer(payload[nl + 1:], dtype=np.complex128).copy()
    moved = flat.reshape(tuple(shape) + (ncomb,))
    return DifferentialForm(geometry, degree, np.moveaxis(moved, -1, 0))


def to_csv(form: DifferentialForm) -> str:
    lines = ["degree,%d" % form.degree,
             "shape,%s" % " ".join(str(s) for s in form.geometry.shape)]
    moved = np.moveaxis(form.comps, 0, -1).reshape(-1)
    for z in moved:
        lines.append("%r,%r" % (z.real, z.imag))
    return "\n".join(lines) + "\n"
