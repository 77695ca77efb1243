"""
sl_n(F_p) computations: ranks of the linearized maps and sums of conjugates.
Conjugation is always x⁻¹·A·x.
"""
import logging
import random

from django.conf import settings
from sympy import GF
from sympy.ntheory import sqrt_mod
from sympy.polys.matrices import DomainMatrix

from matrix_core.models import ModMatrix
from matrix_core.services import ModularLinearAlgebra
from wordwidth.exceptions import CertificateError, PreconditionError, SoftFailure
from .models import ConjSumResult, LieMatrix

logger = logging.getLogger(__name__)

LA = ModularLinearAlgebra

# Below this prime the conic x²+y²+z² = 0 may have no usable point
CURVE_POINT_MIN_PRIME = 17


def _unit(n, p, i, j, x=1):
    """x·E_{i,j}, 0-based."""
    rows = [[0] * n for _ in range(n)]
    rows[i][j] = x
    return ModMatrix(rows, p)


def _elementary(n, p, i, j, x):
    rows = [[1 if r == c else 0 for c in range(n)] for r in range(n)]
    rows[i][j] = x
    return ModMatrix(rows, p)


def _diag(entries, p):
    n = len(entries)
    return ModMatrix([[entries[i] if i == j else 0 for j in range(n)] for i in range(n)], p)


def _from_columns(columns, p):
    n = len(columns)
    return ModMatrix([[columns[j][i] for j in range(n)] for i in range(n)], p)


def _rank(vectors, p):
    return LA.rank_mod_p([list(v) for v in vectors], p) if vectors else 0


def _nullspace(g: ModMatrix):
    p = g.modulus
    dm = DomainMatrix.from_list([list(row) for row in g.rows], GF(p))
    return [[int(x) % p for x in row] for row in dm.nullspace().to_list()]


def _apply(g: ModMatrix, v):
    return LA.apply(g.rows, v, g.modulus)


def _plain(A):
    return ModMatrix(A.rows, A.modulus)


def _conj(A, x):
    return x.inverse() * _plain(A) * x


def _conj_sum(A, conjugators):
    total = ModMatrix([[0] * A.n for _ in range(A.n)], A.modulus)
    for x in conjugators:
        total = total + _conj(A, x)
    return total


def _block_embed(g: ModMatrix):
    """diag(1, g)."""
    n = g.n + 1
    rows = [[1 if i == j else 0 for j in range(n)] for i in range(n)]
    for i in range(1, n):
        for j in range(1, n):
            rows[i][j] = g.rows[i - 1][j - 1]
    return ModMatrix(rows, g.modulus)


def _complete_basis(columns, n, p):
    columns = [list(c) for c in columns]
    for k in range(n):
        if len(columns) == n:
            break
        e = [1 if i == k else 0 for i in range(n)]
        if _rank(columns + [e], p) > len(columns):
            columns.append(e)
    return columns


def _is_nilpotent(A):
    power = _plain(A)
    for _ in range(A.n - 1):
        power = power * _plain(A)
    return not any(power.flat)


class LieService:

    @staticmethod
    def sl_basis(n, p):
        """E_{i,j} for i ≠ j, then H_i = E_{i,i} − E_{i+1,i+1}."""
        basis = [_unit(n, p, i, j) for i in range(n) for j in range(n) if i != j]
        for i in range(n - 1):
            rows = [[0] * n for _ in range(n)]
            rows[i][i], rows[i + 1][i + 1] = 1, -1
            basis.append(ModMatrix(rows, p))
        return basis

    @staticmethod
    def diff_images(a: ModMatrix, b: ModMatrix, p=None):
        """
        Flattened images of the sl_n basis under (X, Y) ↦ b⁻¹(X − a⁻¹Xa)b + (Y − b⁻¹Yb):
        first the X-directions, then the Y-directions, in `sl_basis` order.
        """
        p = p or a.modulus
        a, b = ModMatrix(a.rows, p), ModMatrix(b.rows, p)
        if a.n != b.n:
            raise PreconditionError("The differential needs matrices of the same size.")
        basis = LieService.sl_basis(a.n, p)
        images = [_conj(E - _conj(E, a), b).flat for E in basis]
        images += [(E - _conj(E, b)).flat for E in basis]
        return images

    @staticmethod
    def diff_rank(a: ModMatrix, b: ModMatrix, p=None) -> int:
        """Rank over F_p of the differential above on sl_n × sl_n."""
        return _rank(LieService.diff_images(a, b, p), p or a.modulus)

    @staticmethod
    def bracket_rank(a: ModMatrix, b: ModMatrix, p=None) -> int:
        """Rank of (X, Y) ↦ [X, a] + [Y, b] on sl_n × sl_n."""
        p = p or a.modulus
        a, b = ModMatrix(a.rows, p), ModMatrix(b.rows, p)
        images = []
        for E in LieService.sl_basis(a.n, p):
            images.append((E * a - a * E).flat)
            images.append((E * b - b * E).flat)
        return _rank(images, p)

    @staticmethod
    def two_squares(c, p):
        """(x, y) with x² + y² = c in F_p, trying y = 0 first."""
        if p == 2:
            return c % 2, 0
        c %= p
        roots = {}
        for x in range(p):
            roots.setdefault(x * x % p, x)
        if c in roots:
            return roots[c], 0
        for x in range(1, p):
            rest = (c - x * x) % p
            if rest in roots:
                return x, roots[rest]
        raise CertificateError(f"{c} is not a sum of two squares mod {p}.")

    @staticmethod
    def curve_point(p):
        """
        (x, y, z), all non-zero, with x²+y²+z² = 0 and x⁻²+y⁻²+z⁻² ≠ 0 in F_p,
        or None. Points (x, x, 1) are tried before the general (x, y, 1).
        """
        if p < CURVE_POINT_MIN_PRIME:
            logger.warning(f"curve_point: p={p} is below {CURVE_POINT_MIN_PRIME}; a point may not exist")

        def ok(x, y):
            if (x * x + y * y + 1) % p:
                return False
            return (pow(x * x, -1, p) + pow(y * y, -1, p) + 1) % p != 0

        for x in range(1, p):
            if ok(x, x):
                return x, x, 1
        for x in range(1, p):
            for y in range(x + 1, p):
                if ok(x, y):
                    return x, y, 1
        return None

    # Sums of conjugates

    @staticmethod
    def _rank_one_frame(R):
        """(z, δ) with z ∈ SL_n and z⁻¹·R·z = δ·E_{1,2}, for rank-one nilpotent R."""
        n, p = R.n, R.modulus
        i, j = next((i, j) for i in range(n) for j in range(n) if R.rows[i][j])
        u = [R.rows[k][j] for k in range(n)]
        scale = pow(R.rows[i][j], -1, p)
        v = [R.rows[i][l] * scale % p for l in range(n)]
        s = next(k for k in range(n) if v[k])
        v_s_inv = pow(v[s], -1, p)
        w2 = [0] * n
        w2[s] = v_s_inv
        columns = [u, w2]
        for k in range(n):
            if len(columns) == n:
                break
            if k == s:
                continue
            kv = [0] * n
            kv[k] = 1
            kv[s] = (-v[k] * v_s_inv) % p
            if _rank(columns + [kv], p) > len(columns):
                columns.append(kv)
        delta = _from_columns(columns, p).det
        columns[0] = [x * pow(delta, -1, p) % p for x in u]
        z = _from_columns(columns, p)
        if _conj(R, z).rows != _unit(n, p, 0, 1, delta).rows:
            raise CertificateError("Rank-one frame does not bring R to a multiple of E_{1,2}.")
        return z, delta

    @staticmethod
    def _unit_conjugator(n, p, i, j):
        """y ∈ SL_n with y⁻¹·E_{1,2}·y = ±E_{i,j} (0-based): a signed permutation."""
        targets = {i: 0, j: 1}
        free = iter(range(2, n))
        for k in range(n):
            if k not in targets:
                targets[k] = next(free)
        rows = [[0] * n for _ in range(n)]
        for k, r in targets.items():
            rows[r][k] = 1
        y = ModMatrix(rows, p)
        if y.det != 1:
            k = next((k for k in range(n) if k not in (i, j)), i)
            rows[targets[k]][k] = -1
            y = ModMatrix(rows, p)
        return y

    @staticmethod
    def _expand_over_rank_one(B, R):
        """
        Conjugators x with Σ x⁻¹·R·x = B, at most two per basis direction:
        B = Σ d_i·u_i + Σ b'_{i,j}·E_{i,j} with u_i a conjugate of E_{i,i+1}
        carrying H_i, and every coefficient a sum of two squares.
        """
        n, p = B.n, B.modulus
        z, delta = LieService._rank_one_frame(R)
        delta_inv = pow(delta, -1, p)
        E12 = _unit(n, p, 0, 1)
        coeffs = {(i, j): B.rows[i][j] for i in range(n) for j in range(n) if i != j}
        terms = []
        running = 0
        for i in range(n - 1):
            running = (running + B.rows[i][i]) % p
            coeffs[(i, i + 1)] -= running
            coeffs[(i + 1, i)] += running
            g = _elementary(n, p, i + 1, i, 1)
            terms.append((running, LieService._unit_conjugator(n, p, i, i + 1) * g, _conj(_unit(n, p, i, i + 1), g)))
        for (i, j), c in coeffs.items():
            terms.append((c, LieService._unit_conjugator(n, p, i, j), _unit(n, p, i, j)))

        conjugators = []
        for c, y, target in terms:
            c %= p
            if not c:
                continue
            image = _conj(E12, y)
            if image.rows == target.rows:
                sign = 1
            elif image.rows == target.scale(-1).rows:
                sign = -1
            else:
                raise CertificateError("Basis conjugator does not reach its target.")
            for s in LieService.two_squares(c * sign * delta_inv, p):
                if s:
                    d = _diag([pow(s, -1, p), s] + [1] * (n - 2), p)
                    conjugators.append(z * d * y)
        return conjugators

    @staticmethod
    def _jordan_frame(N):
        """(M, sizes) with M⁻¹·N·M in Jordan form, chains longest first."""
        n, p = N.n, N.modulus
        powers = [ModMatrix.identity(n, p)]
        while any(powers[-1].flat):
            powers.append(powers[-1] * _plain(N))
        kernels = [_nullspace(P) for P in powers]
        chains = []
        for level in range(len(powers) - 1, 0, -1):
            spanning = [list(v) for v in kernels[level - 1]]
            for top, length in chains:
                spanning.append(_apply(powers[length - level], top))
            base = _rank(spanning, p)
            for v in kernels[level]:
                if _rank(spanning + [v], p) > base:
                    spanning.append(v)
                    base += 1
                    chains.append((v, level))
        columns, sizes = [], []
        for top, length in chains:
            for k in range(length - 1, -1, -1):
                columns.append(_apply(powers[k], top))
            sizes.append(length)
        return _from_columns(columns, p), sizes

    @staticmethod
    def _rank_one_partner(N):
        """
        x ∈ SL_n with N + x⁻¹·N·x of rank one, for nilpotent N of rank >= 2.
        The longest Jordan block gets diag(ε, 1, −1, ...) + E_{2,s} (or a
        scalar when s = 2); every other block is negated by alternating signs.
        """
        n, p = N.n, N.modulus
        M, sizes = LieService._jordan_frame(N)
        d = []
        for size in sizes:
            d.extend((-1) ** k for k in range(1, size + 1))
        s = sizes[0]
        extra = None
        if s >= 3:
            d[:s] = [1] + [(-1) ** k for k in range(2, s + 1)]
            extra = (1, s - 1)
            sign = 1
            for x in d:
                sign *= x
            d[0] = sign
        else:
            d[0], d[1] = 1, 1
            sign = 1
            for x in d:
                sign *= x
            if sign != 1:
                offsets = [sum(sizes[:k]) for k in range(len(sizes))]
                singles = [offset for offset, size in zip(offsets, sizes) if size == 1]
                if singles:
                    d[singles[0]] = -d[singles[0]]
                else:
                    roots = sqrt_mod(p - 1, p, all_roots=True)
                    if not roots:
                        return None
                    d[0] = d[1] = int(roots[0])
        rows = [[d[i] if i == j else 0 for j in range(n)] for i in range(n)]
        if extra is not None:
            rows[extra[0]][extra[1]] = 1
        D = ModMatrix(rows, p)
        if D.det != 1:
            raise CertificateError("Block conjugator is not in SL_n.")
        x = M * D * M.inverse()
        T = _plain(N) + _conj(N, x)
        if _rank([T.rows[i] for i in range(n)], p) != 1 or not _is_nilpotent(T):
            return None
        return x

    @staticmethod
    def _nilpotent_seed(A):
        """
        (conjugators, tags) with Σ x⁻¹·A·x a non-zero nilpotent, or None.
        Non-nilpotent A is reduced by the n = 2 conic step, the nonsingular
        step diag(−1, −1, 1, ...) and the singular block recursion.
        """
        n, p = A.n, A.modulus
        identity = ModMatrix.identity(n, p)
        if _is_nilpotent(A):
            return [identity], []
        if n == 2:
            return LieService._curve_seed(A)
        if A.det:
            x = LieService._nonsingular_partner(A)
            if x is None:
                return None
            inner = LieService._nilpotent_seed(_plain(A) + _conj(A, x))
            if inner is None:
                return None
            conjugators, tags = inner
            return [c for y in conjugators for c in (y, x * y)], ['nonsingular'] + tags
        kernel = _nullspace(_plain(A))
        M = _from_columns(_complete_basis([kernel[0]], n, p), p)
        inner_rows = _conj(A, M).rows
        block = ModMatrix([row[1:] for row in inner_rows[1:]], p)
        if block.is_scalar():
            return None
        inner = LieService._nilpotent_seed(block)
        if inner is None:
            return None
        conjugators, tags = inner
        M_inv = M.inverse()
        return [M * _block_embed(y) * M_inv for y in conjugators], ['singular-block'] + tags

    @staticmethod
    def _nonsingular_partner(A):
        """
        x ∈ SL_n with A + x⁻¹·A·x singular and non-zero: x = M·diag(−1,−1,1,...)·M⁻¹
        for a basis M = (v, Av, A²v, ...).
        """
        n, p = A.n, A.modulus
        candidates = [[1 if i == k else 0 for i in range(n)] for k in range(n)]
        rng = random.Random(settings.LAB_DEFAULT_SEED)
        candidates += [[rng.randrange(p) for _ in range(n)] for _ in range(4 * n)]
        D = _diag([-1, -1] + [1] * (n - 2), p)
        for v in candidates:
            chain = [v, _apply(_plain(A), v)]
            chain.append(_apply(_plain(A), chain[1]))
            if _rank(chain, p) < 3:
                continue
            M = _from_columns(_complete_basis(chain, n, p), p)
            x = M * D * M.inverse()
            T = _plain(A) + _conj(A, x)
            if T.det == 0 and any(T.flat):
                return x
        return None

    @staticmethod
    def _curve_seed(A):
        """Three conjugates of a non-nilpotent A ∈ sl_2 with nilpotent sum."""
        p = A.modulus
        point = LieService.curve_point(p)
        if point is None:
            return None
        y0 = ModMatrix.identity(2, p)
        a, b = A.rows[0]
        c = A.rows[1][0]
        if a and not b and not c:
            y0 = _elementary(2, p, 1, 0, 1)
            a, b = _conj(A, y0).rows[0]
            c = _conj(A, y0).rows[1][0]
        if a:
            if b:
                y0 = y0 * _elementary(2, p, 1, 0, -a * pow(b, -1, p))
            else:
                y0 = y0 * _elementary(2, p, 0, 1, a * pow(c, -1, p))
        if _conj(A, y0).rows[0][0]:
            raise CertificateError("Could not bring A to anti-diagonal form.")
        conjugators = [y0 * _diag([pow(t, -1, p), t], p) for t in point]
        return conjugators, ['curve']

    @staticmethod
    def _random_element(n, p, table, rng):
        if table is not None:
            return table.element(rng.randrange(len(table)))
        x = ModMatrix.identity(n, p)
        for _ in range(2 * n * n):
            i, j = rng.sample(range(n), 2)
            x = x * _elementary(n, p, i, j, rng.randrange(p))
        return x

    @staticmethod
    def _spanning_decompose(A, B, table, rng, attempts=3):
        """
        Conjugates of A spanning sl_n, coefficients from a linear solve mod p,
        each coefficient c expanded into c repeated conjugators.
        """
        n, p = A.n, A.modulus
        dim = n * n - 1
        best = None
        for _ in range(attempts):
            chosen, vectors = [], []
            draws = 0
            while len(vectors) < dim and draws < 50 * dim:
                draws += 1
                x = LieService._random_element(n, p, table, rng)
                v = list(_conj(A, x).flat)
                if _rank(vectors + [v], p) > len(vectors):
                    vectors.append(v)
                    chosen.append(x)
            if len(vectors) < dim:
                continue
            system = [[vectors[c][r] for c in range(dim)] for r in range(n * n)]
            coeffs = LA.solve(system, list(B.flat), p, 1)
            if coeffs is None:
                continue
            conjugators = [x for x, c in zip(chosen, coeffs) for _ in range(c)]
            if best is None or len(conjugators) < len(best):
                best = conjugators
        if best is None:
            raise SoftFailure(f"No spanning set of conjugates found after {attempts} attempts.")
        return best

    @staticmethod
    def conj_sum_decompose(A, B, p=None, table=None, seed=None) -> ConjSumResult:
        """
        Conjugators x_1..x_k ∈ SL_n(F_p) with Σ x_i⁻¹·A·x_i = B.

        A is first brought to a rank-one nilpotent R as a short sum of its
        conjugates; B is then expanded over conjugates of R. When that ladder
        does not apply (p = 2, small p, scalar blocks) a spanning set of
        conjugates is solved against B instead.
        """
        A = LieMatrix.coerce(A, p)
        B = LieMatrix.coerce(B, p)
        p = A.p
        n = A.n
        if B.n != n or B.p != p:
            raise PreconditionError("A and B must be in the same sl_n(F_p).")
        if A.is_scalar():
            raise PreconditionError("A is central; its conjugates span only the scalars.")
        if table is not None and (table.modulus != p or table.n != n):
            raise PreconditionError(f"Table is SL_{table.n}(Z/{table.modulus}), expected SL_{n}(F_{p}).")
        rng = random.Random(settings.LAB_DEFAULT_SEED if seed is None else seed)
        dim = n * n - 1

        if A.rows == B.rows:
            result = ConjSumResult((ModMatrix.identity(n, p),), 'identity', 1)
        elif B.is_zero():
            result = ConjSumResult((), 'zero', 0)
        else:
            ladder = None if p == 2 else LieService._ladder(A)
            if ladder is not None:
                seed_conjugators, tags = ladder
                R = _conj_sum(A, seed_conjugators)
                expansion = LieService._expand_over_rank_one(B, R)
                conjugators = [y * x for x in expansion for y in seed_conjugators]
                result = ConjSumResult(tuple(conjugators), '+'.join(tags), 2 * dim * len(seed_conjugators))
            else:
                logger.info(f"conj_sum_decompose: structured ladder unavailable for p={p}, n={n}; solving a spanning set")
                conjugators = LieService._spanning_decompose(A, B, table, rng)
                result = ConjSumResult(tuple(conjugators), 'spanning', dim * (p - 1))

        total = _conj_sum(A, result.conjugators)
        if total.rows != B.rows:
            raise CertificateError("Sum of conjugates does not reproduce B.")
        if any(x.det != 1 for x in result.conjugators):
            raise CertificateError("A conjugator is not in SL_n(F_p).")
        logger.debug(f"conj_sum_decompose: {result.length} terms via {result.strategy} (bound {result.bound})")
        return result

    @staticmethod
    def _ladder(A):
        """(conjugators, tags) with Σ x⁻¹·A·x a rank-one nilpotent, or None."""
        nilpotent = LieService._nilpotent_seed(A)
        if nilpotent is None:
            return None
        conjugators, tags = nilpotent
        N = _conj_sum(A, conjugators)
        if not any(N.flat):
            return None
        if _rank([N.rows[i] for i in range(N.n)], N.modulus) == 1:
            return conjugators, tags or ['rank-one']
        x = LieService._rank_one_partner(N)
        if x is None:
            return None
        identity = ModMatrix.identity(A.n, A.modulus)
        return [y * d for y in conjugators for d in (identity, x)], tags + ['jordan']
