"""Tensor algebra over abstract generators with commutator rewriting.

Elements are graded sums of ordered generator words with exact
complex-rational coefficients (or numeric complex ones when the pairing
oracle is numeric).  The commutation ideal is realized as a confluent
rewriting system: any total generator order gives a unique normal form
because the commutators are central scalars.  The dynamics ideal is a
generator-for-scalar substitution.
"""

from dataclasses import dataclass
from fractions import Fraction

import numpy as np


class AlgebraError(ValueError):
    pass


PRODUCT_DEGREE_CAP = 8
SYMMETRIZE_DEGREE_CAP = 6


# ---------------------------------------------------------------------------
# exact complex rationals


class QC:
    """Complex number with Fraction real and imaginary parts."""

    __slots__ = ("re", "im")

    def __init__(self, re=0, im=0):
        self.re = Fraction(re)
        self.im = Fraction(im)

    @staticmethod
    def of(value):
        if isinstance(value, QC):
            return value
        if isinstance(value, complex):
            raise AlgebraError("cannot promote a float complex to exact arithmetic")
        return QC(value, 0)

    @staticmethod
    def _coerce(value):
        if isinstance(value, QC):
            return value
        if isinstance(value, (int, Fraction)):
            return QC(value, 0)
        return None

    def __add__(self, other):
        other = QC._coerce(other)
        if other is None:
            return NotImplemented
        return QC(self.re + other.re, self.im + other.im)

    __radd__ = __add__

    def __sub__(self, other):
        other = QC._coerce(other)
        if other is None:
            return NotImplemented
        return QC(self.re - other.re, self.im - other.im)

    def __neg__(self):
        return QC(-self.re, -self.im)

    def __mul__(self, other):
        other = QC._coerce(other)
        if other is None:
            return NotImplemented
        return QC(self.re * other.re - self.im * other.im,
                  self.re * other.im + self.im * other.re)

    __rmul__ = __mul__

    def __truediv__(self, other):
        if isinstance(other, QC):
            den = other.re * other.re + other.im * other.im
            conj = QC(other.re, -other.im)
            num = self * conj
            return QC(num.re / den, num.im / den)
        return QC(self.re / other, self.im / other)

    def conjugate(self):
        return QC(self.re, -self.im)

    def is_zero(self):
        return self.re == 0 and self.im == 0

    def __eq__(self, other):
        if isinstance(other, QC):
            return self.re == other.re and self.im == other.im
        if isinstance(other, (int, Fraction)):
            return self.im == 0 and self.re == other
        return NotImplemented

    def __hash__(self):
        return hash((self.re, self.im))

    def __repr__(self):
        return "QC(%s, %s)" % (self.re, self.im)

    def to_complex(self):
        return complex(self.re) + 1j * complex(self.im)


QC_I = QC(0, 1)


def _is_exact(c):
    return isinstance(c, QC)


def _conj(c):
    return c.conjugate() if _is_exact(c) else np.conjugate(c)


def _zero_like(c):
    return QC() if _is_exact(c) else 0j


def _coeff_is_zero(c):
    return c.is_zero() if _is_exact(c) else c == 0


# ---------------------------------------------------------------------------
# generators and elements


@dataclass(frozen=True)
class Generator:
    """Abstract generator: a totally ordered id plus an optional payload.

    Payloads carry whatever the pairing oracle evaluates: a test-form
    handle, a reduced-data handle, or nothing for pure-symbolic runs.
    """

    gid: int
    payload: object = None

    def __lt__(self, other):
        return self.gid < other.gid


class TensorAlgebraElement:
    """Finite graded sum of generator words; degree-0 part is the scalar.

    Canonical form: like words merged, zero coefficients dropped.  Words
    are tuples of Generators; the empty word is the unit.
    """

    __slots__ = ("terms",)

    def __init__(self, terms=None):
        self.terms = dict(terms or {})
        self._canonical()

    def _canonical(self):
        dead = [w for w, c in self.terms.items() if _coeff_is_zero(c)]
        for w in dead:
            del self.terms[w]

    # constructors ---------------------------------------------------------

    @staticmethod
    def unit(exact=True):
        one = QC(1) if exact else 1.0 + 0j
        return TensorAlgebraElement({(): one})

    @staticmethod
    def scalar(c):
        return TensorAlgebraElement({(): c})

    @staticmethod
    def field(gen, exact=True):
        """Degree-one element (0, F, 0, ...) for the generator's payload."""
        one = QC(1) if exact else 1.0 + 0j
        return TensorAlgebraElement({(gen,): one})

    @staticmethod
    def word(gens, coeff):
        return TensorAlgebraElement({tuple(gens): coeff})

    # queries ---------------------------------------------------------------

    def degrees(self):
        return sorted({len(w) for w in self.terms})

    def max_degree(self):
        return max((len(w) for w in self.terms), default=0)

    def degree_part(self, n):
        return TensorAlgebraElement({w: c for w, c in self.terms.items() if len(w) == n})

    def scalar_part(self):
        return self.terms.get((), None)

    def is_zero(self):
        return not self.terms

    def __eq__(self, other):
        if not isinstance(other, TensorAlgebraElement):
            return NotImplemented
        return self.terms == other.terms

    def __repr__(self):
        if not self.terms:
            return "TensorAlgebraElement(0)"
        bits = []
        for w in sorted(self.terms, key=lambda w: (len(w), tuple(g.gid for g in w))):
            label = "*".join("g%d" % g.gid for g in w) or "1"
            bits.append("(%r)%s" % (self.terms[w], label))
        return "TensorAlgebraElement(%s)" % " + ".join(bits)

    # linear structure ------------------------------------------------------

    def __add__(self, other):
        out = dict(self.terms)
        for w, c in other.terms.items():
            out[w] = out[w] + c if w in out else c
        return TensorAlgebraElement(out)

    def __sub__(self, other):
        return self + (-1) * other

    def __mul__(self, z):
        if isinstance(z, TensorAlgebraElement):
            return bu_mul(self, z)
        if isinstance(z, int):
            z = QC(z) if self._exact_mode() else complex(z)
        return TensorAlgebraElement({w: c * z for w, c in self.terms.items()})

    def __rmul__(self, z):
        if isinstance(z, int):
            z = QC(z) if self._exact_mode() else complex(z)
        return TensorAlgebraElement({w: z * c for w, c in self.terms.items()})

    def __neg__(self):
        return (-1) * self

    def _exact_mode(self):
        for c in self.terms.values():
            return _is_exact(c)
        return True


def bu_mul(a: TensorAlgebraElement, b: TensorAlgebraElement) -> TensorAlgebraElement:
    """Graded product: word concatenation, bilinearly extended."""
    out = {}
    for wa, ca in a.terms.items():
        for wb, cb in b.terms.items():
            w = wa + wb
            if len(w) > PRODUCT_DEGREE_CAP:
                raise AlgebraError("product degree %d exceeds cap %d"
                                   % (len(w), PRODUCT_DEGREE_CAP))
            c = ca * cb
            out[w] = out[w] + c if w in out else c
    return TensorAlgebraElement(out)


def bu_star(a: TensorAlgebraElement) -> TensorAlgebraElement:
    """Involution: conjugate coefficients, reverse every word."""
    return TensorAlgebraElement({tuple(reversed(w)): _conj(c) for w, c in a.terms.items()})


# ---------------------------------------------------------------------------
# the pairing oracle and the CCR normal form


@dataclass
class PairingOracle:
    """Antisymmetric scalar pairing of generators.

    evaluator(ga, gb) must return the commutator pairing value; exact
    coefficients come from a supplied matrix, numeric ones typically from
    the lattice symplectic form on reduced-data payloads.
    """

    evaluator: object

    def __call__(self, ga, gb):
        return self.evaluator(ga, gb)

    def check_antisymmetry(self, gens, tol=1e-12):
        for a in gens:
            for b in gens:
                va, vb = self(a, b), self(b, a)
                if _is_exact(va):
                    if not (va + vb).is_zero():
                        raise AlgebraError("oracle is not antisymmetric at (%d,%d)" % (a.gid, b.gid))
                else:
                    if abs(va + vb) > tol:
                        raise AlgebraError("oracle is not antisymmetric at (%d,%d)" % (a.gid, b.gid))


def oracle_from_matrix(mat, exact=True):
    """Oracle indexed by generator ids into an antisymmetric matrix."""
    if exact:
        rows = [[QC.of(x) for x in row] for row in mat]
    else:
        rows = [[complex(x) for x in row] for row in mat]

    def ev(ga, gb):
        return rows[ga.gid][gb.gid]

    return PairingOracle(ev)


def _imag_unit(exact):
    return QC_I if exact else 1j


def ccr_normal_form(a: TensorAlgebraElement, oracle: PairingOracle) -> TensorAlgebraElement:
    """Unique normal form modulo the commutation ideal.

    Words are rewritten to ascending generator order; each adjacent swap
    of an out-of-order pair (x, y) emits i * oracle(x, y) times the word
    with the pair removed.  Central scalars make the system confluent, so
    the reduction order cannot matter; tests exercise that exhaustively.
    """
    exact = a._exact_mode()
    iunit = _imag_unit(exact)
    out = {}
    frontier = list(a.terms.items())
    while frontier:
        w, c = frontier.pop()
        pos = None
        for i in range(len(w) - 1):
            if w[i + 1] < w[i]:
                pos = i
                break
        if pos is None:
            out[w] = out[w] + c if w in out else c
            continue
        swapped = w[:pos] + (w[pos + 1], w[pos]) + w[pos + 2:]
        frontier.append((swapped, c))
        reduced = w[:pos] + w[pos + 2:]
        frontier.append((reduced, c * iunit * oracle(w[pos], w[pos + 1])))
    return TensorAlgebraElement(out)


def commutator(a, b):
    return bu_mul(a, b) - bu_mul(b, a)


# ---------------------------------------------------------------------------
# dynamics ideal


def dynamics_reduce(a: TensorAlgebraElement, kernel_test, scalar_map) -> TensorAlgebraElement:
    """Quotient by the field-equation ideal.

    Every generator recognized by kernel_test is replaced by the scalar
    scalar_map(gen) (the smeared-source value; zero for the source-free
    ideal).  The relation is central, so in-place substitution anywhere
    in a word is the exact quotient map.
    """
    out = {}
    frontier = list(a.terms.items())
    while frontier:
        w, c = frontier.pop()
        pos = None
        for i, gen in enumerate(w):
            if kernel_test(gen):
                pos = i
                break
        if pos is None:
            out[w] = out[w] + c if w in out else c
            continue
        frontier.append((w[:pos] + w[pos + 1:], c * scalar_map(w[pos])))
    return TensorAlgebraElement(out)


# ---------------------------------------------------------------------------
# symmetrization against the commutation ideal


def _permutations_as_adjacent_swaps(perm):
    """Adjacent-transposition path realizing a permutation (bubble order).

    Returns a list of positions k meaning `swap slots k, k+1`, to be
    applied left to right to the identity arrangement.
    """
    perm = list(perm)
    swaps = []
    arr = list(range(len(perm)))
    # selection-sort arr into perm by adjacent swaps
    for target_pos in range(len(perm)):
        cur = arr.index(perm[target_pos])
        while cur > target_pos:
            arr[cur - 1], arr[cur] = arr[cur], arr[cur - 1]
            swaps.append(cur - 1)
            cur -= 1
    return swaps


def symmetrize(a: TensorAlgebraElement) -> TensorAlgebraElement:
    """Per-degree average over all argument permutations."""
    import itertools as it
    import math

    out = TensorAlgebraElement({})
    for n in a.degrees():
        part = a.degree_part(n)
        if n <= 1:
            out = out + part
            continue
        if n > SYMMETRIZE_DEGREE_CAP:
            raise AlgebraError("symmetrization capped at degree %d" % SYMMETRIZE_DEGREE_CAP)
        exact = part._exact_mode()
        inv = (QC(1) / QC(math.factorial(n))) if exact else 1.0 / math.factorial(n)
        acc = {}
        for w, c in part.terms.items():
            for perm in it.permutations(range(n)):
                pw = tuple(w[p] for p in perm)
                cc = c * inv
                acc[pw] = acc[pw] + cc if pw in acc else cc
        out = out + TensorAlgebraElement(acc)
    return out


@dataclass
class IdealWitness:
    """One certified commutation-ideal summand: left * generator * right.

    generator is the canonical pair element (-i G(x,y), 0, xy - yx, 0...)
    scaled by coeff; expand() rebuilds the ideal element it certifies.
    """

    left: tuple
    x: Generator
    y: Generator
    right: tuple
    coeff: object
    oracle: PairingOracle

    def generator_element(self):
        exact = _is_exact(self.coeff)
        iunit = _imag_unit(exact)
        one = QC(1) if exact else 1.0 + 0j
        # additive construction: the two words coincide (and cancel) when x == y
        return (TensorAlgebraElement.scalar(-iunit * self.oracle(self.x, self.y))
                + TensorAlgebraElement.word((self.x, self.y), one)
                + TensorAlgebraElement.word((self.y, self.x), -one))

    def expand(self):
        return self.coeff * bu_mul(bu_mul(TensorAlgebraElement({self.left: _one_like(self.coeff)}),
                                          self.generator_element()),
                                   TensorAlgebraElement({self.right: _one_like(self.coeff)}))


def _one_like(c):
    return QC(1) if _is_exact(c) else 1.0 + 0j


def symmetrize_decompose(a: TensorAlgebraElement, oracle: PairingOracle):
    """Split an element into a fully symmetric part plus an ideal part.

    Works degree by degree from the top: the permutation average gives
    the symmetric piece, the telescoped adjacent swaps certify the rest
    as commutation-ideal members while emitting degree-(n-2) carries that
    are recursed on.  Reconstruction sym + ideal == a is exact.
    """
    import itertools as it
    import math

    if a.max_degree() > SYMMETRIZE_DEGREE_CAP:
        raise AlgebraError("symmetrization capped at degree %d" % SYMMETRIZE_DEGREE_CAP)
    sym_total = TensorAlgebraElement({})
    ideal_total = TensorAlgebraElement({})
    witnesses = []
    work = a
    while not work.is_zero():
        n = work.max_degree()
        part = work.degree_part(n)
        rest = work - part
        if n <= 1:
            sym_total = sym_total + work
            break
        exact = part._exact_mode()
        iunit = _imag_unit(exact)
        inv = (QC(1) / QC(math.factorial(n))) if exact else 1.0 / math.factorial(n)
        sym_total = sym_total + symmetrize(part)
        carry = TensorAlgebraElement({})
        # part - sym = (1/n!) sum_sigma sum_steps [left R right + i G(x,y) reduced]
        # where each step is one adjacent transposition on the walked word
        for w, c in part.terms.items():
            for perm in it.permutations(range(n)):
                swaps = _permutations_as_adjacent_swaps(perm)
                cur = w
                for k in swaps:
                    x, y = cur[k], cur[k + 1]
                    coeff = c * inv
                    wit = IdealWitness(cur[:k], x, y, cur[k + 2:], coeff, oracle)
                    witnesses.append(wit)
                    ideal_total = ideal_total + wit.expand()
                    reduced = cur[:k] + cur[k + 2:]
                    carry = carry + TensorAlgebraElement(
                        {reduced: coeff * iunit * oracle(x, y)})
                    cur = cur[:k] + (y, x) + cur[k + 2:]
        work = rest + carry
    return sym_total, ideal_total, witnesses


def only_symmetric_in_ideal_is_zero(samples, rng, oracle, gens, max_degree=4):
    """Randomized confirmation that symmetrizing ideal elements kills the top degree.

    Builds random left * generator-pair * right products, symmetrizes,
    and checks the top-degree part vanishes exactly.
    """
    for _ in range(samples):
        nl = int(rng.integers(0, (max_degree - 2) + 1))
        nr = int(rng.integers(0, (max_degree - 2 - nl) + 1))
        left = tuple(gens[int(i)] for i in rng.integers(0, len(gens), nl))
        right = tuple(gens[int(i)] for i in rng.integers(0, len(gens), nr))
        x, y = (gens[int(i)] for i in rng.integers(0, len(gens), 2))
        wit = IdealWitness(left, x, y, right, QC(1), oracle)
        elem = wit.expand()
        top = symmetrize(elem).degree_part(elem.max_degree())
        if not top.is_zero():
            return False
    return True


# ---------------------------------------------------------------------------
# the source-shift morphism


def gamma_shift(a: TensorAlgebraElement, scalar_map, direction=+1) -> TensorAlgebraElement:
    """Algebra endomorphism shifting each generator by its classical value.

    Degree-one elements map to (-s(g), g, 0, ...) for direction +1 and
    (+s(g), g, 0, ...) for -1; scalars are fixed.  The two directions
    compose to the identity exactly.
    """
    if direction not in (+1, -1):
        raise AlgebraError("direction must be +1 or -1")
    out = TensorAlgebraElement({})
    for w, c in a.terms.items():
        # expand the product of (g_i - direction * s(g_i) * 1) over the word
        expansion = {(): c}
        for g in w:
            shift = (-direction) * scalar_map(g)
            nxt = {}
            for word, coeff in expansion.items():
                nw = word + (g,)
                nxt[nw] = nxt[nw] + coeff if nw in nxt else coeff
                sc = coeff * shift
                nxt[word] = nxt[word] + sc if word in nxt else sc
            expansion = nxt
        out = out + TensorAlgebraElement(expansion)
    return out


def map_generators(a: TensorAlgebraElement, gen_map) -> TensorAlgebraElement:
    """Generator-wise relabeling (the initial-data representation hook)."""
    return TensorAlgebraElement({tuple(gen_map(g) for g in w): c for w, c in a.terms.items()})


# ---------------------------------------------------------------------------
# text serialization (round-trips exactly in symbolic mode)


def to_text(a: TensorAlgebraElement) -> str:
    lines = []
    for w in sorted(a.terms, key=lambda w: (len(w), tuple(g.gid for g in w))):
        c = a.terms[w]
        if _is_exact(c):
            coeff = "%s %s" % (c.re, c.im)
        else:
            coeff = "%r %r" % (c.real, c.imag)
        lines.append("%d | %s | %s" % (len(w), " ".join(str(g.gid) for g in w), coeff))
    return "\n".join(lines) + "\n"


def from_text(text, gen_lookup, exact=True):
    terms = {}
    for line in text.strip().splitlines():
        deg_s, word_s, coeff_s = [part.strip() for part in line.split("|")]
        gids = [int(x) for x in word_s.split()] if word_s else []
        if len(gids) != int(deg_s):
            raise AlgebraError("degree tag does not match word length")
        re_s, im_s = coeff_s.split()
        coeff = QC(Fraction(re_s), Fraction(im_s)) if exact else float(re_s) + 1j * float(im_s)
        terms[tuple(gen_lookup(g) for g in gids)] = coeff
    return TensorAlgebraElement(terms)
