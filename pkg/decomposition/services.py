import hashlib
import itertools
import logging
from math import gcd

from django.conf import settings
from sympy.ntheory import factorint, primefactors
from sympy.ntheory.modular import crt
from sympy.core.intfunc import igcdex

from matrix_core.models import CongruenceLevel, SquareIntMatrix
from matrix_core.services import MatrixService
from wordwidth.exceptions import (
    CertificateError, MembershipError, OutOfRelationError, PreconditionError, SoftFailure,
)
from .models import (
    AlternatingResult, BlockDiagFactors, ClassifiedFactor, CommutatorBridge, ElementaryFactor,
    FactorCertificate, PeelStep,
)

logger = logging.getLogger(__name__)

M = MatrixService

# search limits for the alternating 3×3 factorization
_SPLIT_BOX = 3
_SPLIT_COLUMN_TRIES = 6
_WRAPPERS_PER_DEPTH = 40
_ENTRY_SLACK_BITS = 64
_DIVISOR_TRIAL_LIMIT = 10 ** 4
_MAX_DIVISORS = 4096
_DESCRIBE_MAX_BITS = 1024

_STABLE_RANGE_FREE = 4


def _gcd_all(values):
    g = 0
    for v in values:
        g = gcd(g, v)
    return g


def _bezout(values):
    """Integers x with sum(x_i * values_i) = gcd(values)."""
    coeffs = [0] * len(values)
    g = 0
    for idx, v in enumerate(values):
        if v == 0:
            continue
        if g == 0:
            g, coeffs[idx] = abs(v), (1 if v > 0 else -1)
            continue
        s, t, h = (int(x) for x in igcdex(g, v))
        coeffs = [s * c for c in coeffs]
        coeffs[idx] = t
        g = h
    return coeffs, g


def _assemble(m, size, blocks):
    """n×n matrix from a dict {(bi, bj): block}, identity blocks on the diagonal."""
    n = m * size
    rows = [[1 if i == j else 0 for j in range(n)] for i in range(n)]
    for (bi, bj), block in blocks.items():
        for r in range(size):
            for c in range(size):
                rows[bi * size + r][bj * size + c] = block.rows[r][c]
    return SquareIntMatrix(rows)


def _signed_reversal(n):
    """Antidiagonal permutation matrix with a sign fixed so that det = 1."""
    rows = [[1 if i + j == n - 1 else 0 for j in range(n)] for i in range(n)]
    if (n * (n - 1) // 2) % 2:
        rows[0][n - 1] = -1
    return SquareIntMatrix(rows)


def _max_bits(g):
    return max(abs(x).bit_length() for row in g.rows for x in row)


def _describe(g):
    """The matrix text when short, otherwise its size and a digest of its entries."""
    bits = _max_bits(g)
    if bits <= _DESCRIBE_MAX_BITS:
        return g.format()
    entries = ';'.join(','.join(hex(x) for x in row) for row in g.rows)
    digest = hashlib.sha256(entries.encode()).hexdigest()
    return f"{g.n}×{g.n} matrix with entries up to {bits} bits, sha256 {digest}"


def _small_pairs(box):
    pairs = itertools.product(range(-box, box + 1), repeat=2)
    return sorted(pairs, key=lambda p: (max(abs(p[0]), abs(p[1])), abs(p[0]) + abs(p[1])))


def _corner_minor(z):
    """z_33 − z_31·z_13, the coefficient of e·f when the leading minor is adjusted."""
    return z.entry(3, 3) - z.entry(3, 1) * z.entry(1, 3)


def _shift_candidates(minor_at):
    """Shifts k to try, those making the affine minor_at(k) small first."""
    r0 = minor_at(0)
    step = minor_at(1) - r0
    candidates = []
    if step:
        centre = -r0 // step
        candidates += [centre, centre + 1, centre - 1]
    candidates += [0, 1, -1]
    return list(dict.fromkeys(candidates))


def _signed_divisors(N):
    """Divisors of N, smallest first, from a factorization capped at trial division."""
    divisors = [1]
    for p, e in factorint(abs(N), limit=_DIVISOR_TRIAL_LIMIT).items():
        divisors = [d * p ** k for d in divisors for k in range(e + 1)]
        if len(divisors) > _MAX_DIVISORS:
            break
    return sorted(divisors + [-d for d in divisors], key=abs)


def _solve_bilinear(D, P, Q, R):
    """Integers (e, f) with D + e·P + f·Q + e·f·R = 0, or None."""
    if R == 0:
        if P == 0 and Q == 0:
            return (0, 0) if D == 0 else None
        (x, y), g = _bezout([P, Q])
        if D % g:
            return None
        return -x * (D // g), -y * (D // g)
    # R times the equation is (R·e + Q)(R·f + P) = P·Q − R·D
    N = P * Q - R * D
    if N == 0:
        if Q % R == 0:
            return -Q // R, 0
        if P % R == 0:
            return 0, -P // R
        return None
    for d1 in _signed_divisors(N):
        d2 = N // d1
        if (d1 - Q) % R == 0 and (d2 - P) % R == 0:
            return (d1 - Q) // R, (d2 - P) // R
    return None


def _alternate(items):
    """ClassifiedFactors from (kind, matrix) pairs; identities dropped, equal neighbours merged."""
    factors = []
    for kind, g in items:
        if g.is_identity():
            continue
        if factors and factors[-1].kind == kind:
            merged = factors.pop().matrix * g
            if not merged.is_identity():
                factors.append(ClassifiedFactor(kind, merged))
        else:
            factors.append(ClassifiedFactor(kind, g))
    return factors


def _twists(q):
    """Fixed level-q pairs (u, l) placed in front of a block that resists two pairs."""
    identity = SquareIntMatrix.identity(3)
    pairs = []
    for t in (1, -1, 2, -2):
        for i, j in ((1, 3), (1, 2), (2, 3)):
            u, l = M.elementary(3, i, j, q * t), M.elementary(3, j, i, q * t)
            pairs += [(u, identity), (identity, l), (u, l)]
    return pairs


def _outer_twists(q):
    """Fixed level-q (l, u) wrapped around a block from outside; the trivial wrap comes first."""
    identity = SquareIntMatrix.identity(3)
    wraps = [(identity, identity)]
    for t in (1, -1, 2, -2):
        for i, j in ((2, 1), (3, 1), (3, 2)):
            l, u = M.elementary(3, i, j, q * t), M.elementary(3, j, i, q * t)
            wraps += [(l, identity), (identity, u), (l, u)]
    return wraps


def _nearest_multiple(num, den, q):
    """The multiple of q nearest to num / den."""
    if den == 0:
        return 0
    return q * ((2 * num + den * q) // (2 * den * q))


def _size_reduce(g, q, rounds=32):
    """
    (l, r, u) with g = l·r·u, l lower and u upper unitriangular of level q.
    Each step subtracts a level-q multiple of an earlier row or column from a
    later one and is kept only when the sum of squared entries drops.
    """
    def norm(v):
        return sum(x * x for x in v)

    r = [list(row) for row in g.rows]
    l = u = SquareIntMatrix.identity(3)
    for _ in range(rounds):
        moved = False
        for i, j in ((1, 0), (2, 0), (2, 1)):
            t = _nearest_multiple(sum(x * y for x, y in zip(r[i], r[j])), norm(r[j]), q)
            row = [x - t * y for x, y in zip(r[i], r[j])]
            if t and norm(row) < norm(r[i]):
                r[i] = row
                l = l * M.elementary(3, i + 1, j + 1, t)
                moved = True
        for i, j in ((0, 1), (0, 2), (1, 2)):
            ci, cj = [row[i] for row in r], [row[j] for row in r]
            t = _nearest_multiple(sum(x * y for x, y in zip(cj, ci)), norm(ci), q)
            col = [x - t * y for x, y in zip(cj, ci)]
            if t and norm(col) < norm(cj):
                for row, x in zip(r, col):
                    row[j] = x
                u = M.elementary(3, i + 1, j + 1, t) * u
                moved = True
        if not moved:
            break
    return l, SquareIntMatrix(r), u



def _flip(g):
    """J·g·J for the antidiagonal permutation J; swaps upper and lower unitriangular."""
    return SquareIntMatrix(tuple(tuple(reversed(row)) for row in reversed(g.rows)))


def _core_pairs(factors):
    """U·L pairs left once a leading L and a trailing U are split off."""
    kinds = [f.kind for f in factors]
    if kinds and kinds[0] == 'L':
        kinds = kinds[1:]
    if kinds and kinds[-1] == 'U':
        kinds = kinds[:-1]
    return (len(kinds) + 1) // 2


class RelationService:

    @staticmethod
    def steinberg_conjugate(n, r, s, b, i, j, a):
        """
        Rewrites e_{r,s}(b)·e_{i,j}(a)·e_{r,s}(b)⁻¹ as elementary factors.
        """
        for x, y in ((r, s), (i, j)):
            if x == y or not (1 <= x <= n and 1 <= y <= n):
                raise PreconditionError(f"Bad elementary index ({x},{y}) for n = {n}.")
        if j == r and i == s:
            raise OutOfRelationError(
                f"e_{r},{s} and e_{i},{j} sit on transposed positions; no elementary rewriting exists."
            )
        if j == r:
            return [ElementaryFactor(n, i, j, a), ElementaryFactor(n, i, s, -a * b)]
        if i == s:
            return [ElementaryFactor(n, i, j, a), ElementaryFactor(n, r, j, a * b)]
        return [ElementaryFactor(n, i, j, a)]

    @staticmethod
    def commutator_bridge(n, a, b) -> CommutatorBridge:
        """
        e_{1,n+1}(ab) = [e_{1,2}(a), e_{2,n+1}(b)] with [g,h] = g⁻¹h⁻¹gh.
        """
        if n < 2:
            raise PreconditionError(f"Commutator bridge needs n >= 2, got {n}.")
        size = n + 1
        g = ElementaryFactor(size, 1, 2, a)
        h = ElementaryFactor(size, 2, size, b)
        factors = (
            ElementaryFactor(size, 1, 2, -a),
            ElementaryFactor(size, 2, size, -b),
            g,
            h,
        )
        target = M.elementary(size, 1, size, a * b)
        product = M.product([f.matrix() for f in factors])
        if product != target:
            raise CertificateError(f"Commutator bridge identity failed for a={a}, b={b}.")
        return CommutatorBridge(g=g, h=h, factors=factors, target=target)


class CertificateService:

    @staticmethod
    def factor_problems(factor: ClassifiedFactor, q):
        """Reasons the factor fails its class predicate; empty when it passes."""
        g = factor.matrix
        if factor.kind == 'U':
            return [] if M.in_U(g, q) else ["not in U_n(Z;q)"]
        if factor.kind == 'L':
            return [] if M.in_L(g, q) else ["not in L_n(Z;q)"]
        if factor.kind == 'Uc':
            if factor.h is None or factor.k is None:
                return ["conjugated factor without witness"]
            problems = []
            if not M.in_U(factor.k, q):
                problems.append("witness k not in U_n(Z;q)")
            if factor.h.det != 1:
                problems.append(f"witness h has determinant {factor.h.det}")
            elif factor.h * factor.k * factor.h.inverse() != g:
                problems.append("h·k·h⁻¹ differs from the factor")
            return problems
        size = factor.block_size or 0
        if size < 3 or size > g.n:
            return [f"bad block size {size}"]
        offset = g.n - size
        if g != g.block(offset + 1, size).embed(g.n, offset + 1):
            return ["not of the form diag(I, g*)"]
        return [] if M.mennicke_in_E(g.block(offset + 1, size), q) else ["block fails the Mennicke test"]

    @staticmethod
    def certificate_problems(cert: FactorCertificate):
        problems = []
        for idx, factor in enumerate(cert.factors, start=1):
            if factor.matrix.n != cert.n:
                problems.append(f"factor {idx} ({factor.kind}): dimension {factor.matrix.n}, expected {cert.n}")
                continue
            for p in CertificateService.factor_problems(factor, cert.q):
                problems.append(f"factor {idx} ({factor.kind}): {p}")
        if not problems:
            product = M.product([f.matrix for f in cert.factors], cert.n)
            if product != cert.input:
                problems.append("product of factors differs from the input")
        return problems

    @staticmethod
    def verify_certificate(cert: FactorCertificate):
        problems = CertificateService.certificate_problems(cert)
        if problems:
            raise CertificateError(
                f"Certificate {cert.class_sequence} failed replay.",
                [{"field": "replay", "message": p} for p in problems],
            )
        return True

    @staticmethod
    def embed_certificate(cert: FactorCertificate, n, start):
        """Places every factor of a certificate as a diagonal block of I_n."""
        def place(x):
            return None if x is None else x.embed(n, start)
        factors = []
        for f in cert.factors:
            block_size = None
            if f.kind == 'Eblock':
                block_size = f.block_size
            factors.append(ClassifiedFactor(f.kind, place(f.matrix), h=place(f.h), k=place(f.k), block_size=block_size))
        return FactorCertificate(cert.input.embed(n, start), cert.q, tuple(factors), cert.notes)


class FactorizationService:

    @staticmethod
    def block_diag_factor(blocks, q) -> BlockDiagFactors:
        """
        diag(g_1, ..., g_m) = l1⁻¹·u1⁻¹·l2·u2 for 3×3 blocks in SL_3(Z;q)
        whose ordered product is the identity.
        """
        q = CongruenceLevel.coerce(q).q
        blocks = list(blocks)
        m = len(blocks)
        if m < 1:
            raise PreconditionError("At least one block is required.")
        for idx, g in enumerate(blocks, start=1):
            if g.n != 3 or g.det != 1 or not M.in_congruence(g, q):
                raise MembershipError(f"Block {idx} is not in SL_3(Z;{q}).", [{"field": f"block {idx}", "message": g.format()}])
        identity = SquareIntMatrix.identity(3)
        prefix = [identity]
        for g in blocks:
            prefix.append(prefix[-1] * g)
        if prefix[-1] != identity:
            raise PreconditionError("Ordered product of the blocks is not the identity.")

        l1 = _assemble(m, 3, {(i + 1, i): blocks[i].inverse() for i in range(m - 1)})
        l2 = _assemble(m, 3, {(i + 1, i): identity for i in range(m - 1)})
        u1 = _assemble(m, 3, {(i, i + 1): identity - prefix[i + 1] for i in range(m - 1)})
        u2 = _assemble(m, 3, {(i, i + 1): (identity - prefix[i + 1]) * blocks[i + 1] for i in range(m - 1)})

        target = SquareIntMatrix.from_blocks(blocks)
        l2_inv = l2.inverse()
        u1_inv = u1.inverse()
        certificate = FactorCertificate(
            input=target,
            q=q,
            factors=(
                ClassifiedFactor('L', l1.inverse() * l2),
                ClassifiedFactor('Uc', l2_inv * u1_inv * l2, h=l2_inv, k=u1_inv),
                ClassifiedFactor('U', u2),
            ),
        )
        CertificateService.verify_certificate(certificate)
        return BlockDiagFactors(l1=l1, u1=u1, l2=l2, u2=u2, certificate=certificate)

    @staticmethod
    def split_ul(g: SquareIntMatrix, q):
        """
        The unique (u, l) with g = u·l, u in U_n(Z;q) and l in L_n(Z;q),
        or None when g is not such a product.
        """
        q = CongruenceLevel.coerce(q).q
        n = g.n
        u = [[1 if i == j else 0 for j in range(n)] for i in range(n)]
        l = [[1 if i == j else 0 for j in range(n)] for i in range(n)]
        G = g.rows
        for i in range(n - 1, -1, -1):
            for j in range(n - 1, i, -1):
                u[i][j] = G[i][j] - sum(u[i][k] * l[k][j] for k in range(j + 1, n))
            for j in range(i, -1, -1):
                value = G[i][j] - sum(u[i][k] * l[k][j] for k in range(i + 1, n))
                if j == i:
                    if value != 1:
                        return None
                else:
                    l[i][j] = value
        u_m, l_m = SquareIntMatrix(u), SquareIntMatrix(l)
        if not (M.in_U(u_m, q) and M.in_L(l_m, q)) or u_m * l_m != g:
            return None
        return u_m, l_m

    @staticmethod
    def corner_factor(pairs, q, corner='top', n=None) -> FactorCertificate:
        """
        Certificate L,Uc,U,L for diag(g_1⋯g_m, I_3, ..., I_3) where each g_i is
        given as a pair (u_i, l_i). With corner='bottom' the product block sits
        in the bottom-right corner instead. `n` pads with identity rows when
        larger than 3m.
        """
        q = CongruenceLevel.coerce(q).q
        pairs = list(pairs)
        m = len(pairs)
        if m < 1:
            raise PreconditionError("corner_factor needs at least one (u, l) pair.")
        for idx, (u, l) in enumerate(pairs, start=1):
            if u.n != 3 or l.n != 3 or not M.in_U(u, q) or not M.in_L(l, q):
                raise MembershipError(f"Pair {idx} is not in U_3(Z;{q}) x L_3(Z;{q}).")
        n = n or 3 * m
        if n < 3 * m:
            raise PreconditionError(f"Dimension {n} is too small for {m} blocks.")
        gs = [u * l for u, l in pairs]
        product = M.product(gs)
        identity = SquareIntMatrix.identity(3)

        # h lists the g_i so that the blocks of g·h⁻¹ multiply to the identity
        if corner == 'top':
            order = list(range(m - 1, -1, -1))
            target_blocks = [product] + [identity] * (m - 1)
        elif corner == 'bottom':
            order = list(range(m - 2, -1, -1)) + [m - 1]
            target_blocks = [identity] * (m - 1) + [product]
        else:
            raise PreconditionError(f"Unknown corner '{corner}'.")
        h_blocks = [gs[i] for i in order]
        balanced = [t * hb.inverse() for t, hb in zip(target_blocks, h_blocks)]
        block = FactorizationService.block_diag_factor(balanced, q)
        h_upper = SquareIntMatrix.from_blocks([pairs[i][0] for i in order])
        h_lower = SquareIntMatrix.from_blocks([pairs[i][1] for i in order])
        L, Uc, U = block.certificate.factors
        certificate = FactorCertificate(
            input=SquareIntMatrix.from_blocks(target_blocks),
            q=q,
            factors=(L, Uc, ClassifiedFactor('U', U.matrix * h_upper), ClassifiedFactor('L', h_lower)),
        )
        if n > 3 * m:
            start = 1 if corner == 'top' else n - 3 * m + 1
            certificate = CertificateService.embed_certificate(certificate, n, start)
        CertificateService.verify_certificate(certificate)
        return certificate

    @staticmethod
    def stable_range_coeffs(a, box=None):
        """
        t_2..t_m with gcd(a_2 − t_2·a_1, ..., a_m − t_m·a_1) = gcd(a_1, ..., a_m).
        """
        a = [int(x) for x in a]
        if len(a) < 3:
            raise PreconditionError(f"Stable range needs at least 3 entries, got {len(a)}.")
        if not any(a):
            raise PreconditionError("Stable range needs a nonzero vector.")
        target = _gcd_all(a)
        a1, rest = a[0], a[1:]
        if a1 == 0:
            return tuple(0 for _ in rest)

        def works(t):
            return _gcd_all(x - ti * a1 for x, ti in zip(rest, t)) == target

        box = box or settings.LAB_STABLE_RANGE_BOX
        budget = 20000
        # only the leading coordinates move; the rest stay 0
        free = min(len(rest), _STABLE_RANGE_FREE)
        padding = (0,) * (len(rest) - free)
        bound = 1
        while bound <= box:
            order = [0]
            for k in range(1, bound + 1):
                order += [k, -k]
            if len(order) ** free <= budget:
                for head in itertools.product(order, repeat=free):
                    if works(head + padding):
                        return head + padding
            bound *= 2
        logger.debug(f"Stable range box search exhausted for {a}; using the CRT construction.")
        return FactorizationService._stable_range_crt(a)

    @staticmethod
    def _stable_range_crt(a):
        g = _gcd_all(a)
        b = [x // g for x in a]
        b1, b2, tail = b[0], b[1], b[2:]
        t = [0] * (len(b) - 1)
        if not any(tail):
            t[1] = -1
        tail_gcd = _gcd_all(x - ti * b1 for x, ti in zip(tail, t[1:]))
        moduli, residues = [], []
        for p in primefactors(tail_gcd):
            if b1 % p:
                moduli.append(p)
                residues.append((b2 * pow(b1, -1, p) + 1) % p)
        if moduli:
            t[0] = int(crt(moduli, residues)[0])
        result = tuple(t)
        if _gcd_all(x - ti * a[0] for x, ti in zip(a[1:], result)) != g:
            raise CertificateError(f"Stable range construction failed for {a}.")
        return result

    @staticmethod
    def peel_once(g: SquareIntMatrix, q) -> PeelStep:
        q = CongruenceLevel.coerce(q).q
        n = g.n
        if n < 4:
            raise PreconditionError(f"peel_once needs n >= 4, got {n}.")
        problems = M.mennicke_violations(g, q)
        if problems:
            raise MembershipError(f"Input is not in E({n},Z;{q}).", problems)
        identity = SquareIntMatrix.identity(n)
        c1, r, t = identity, identity, ()

        if g.entry(1, 1) != 1:
            # 1. Column operations from C⁻(q) bring gcd(h_21..h_n1) down to q
            column = [q * g.entry(1, 1)] + [g.entry(j, 1) for j in range(2, n + 1)]
            t = FactorizationService.stable_range_coeffs(column)
            c1 = M.product([M.elementary(n, j, 1, -t[j - 2] * q) for j in range(2, n + 1)])
            h = c1 * g
            # 2. A row operation from R⁻(q) fixes h_11 = 1
            ys = [h.entry(j, 1) // q for j in range(2, n + 1)]
            x, y_gcd = _bezout(ys)
            shift, rem = divmod(1 - h.entry(1, 1), q * q)
            if y_gcd != 1 or rem:
                raise CertificateError(f"Peeling invariant broken: gcd {y_gcd}, remainder {rem}.")
            r = M.product([M.elementary(n, 1, j, q * x[j - 2] * shift) for j in range(2, n + 1)])
        h1 = r * c1 * g
        # 3. Clear the first column, then the first row
        c2 = M.product([M.elementary(n, j, 1, -h1.entry(j, 1)) for j in range(2, n + 1)])
        h2 = c2 * h1
        r2 = M.product([M.elementary(n, 1, j, -h2.entry(1, j)) for j in range(2, n + 1)])
        h3 = h2 * r2
        reduced = h3.block(2, n - 1)
        if h3 != reduced.embed(n, 2):
            raise CertificateError("Peeling did not produce diag(1, g').")
        return PeelStep(c1=c1, r=r, c2=c2, r2=r2, reduced=reduced, stable_range=tuple(t))

    @staticmethod
    def factor_E(g: SquareIntMatrix, q, m=3) -> FactorCertificate:
        """
        Certificate L,U,L,Eblock,U for g in E(n,Z;q), the Eblock being
        diag(I, g*) with g* of size m.
        """
        q = CongruenceLevel.coerce(q).q
        n = g.n
        if not 3 <= m <= n:
            raise PreconditionError(f"Need n >= m >= 3, got n = {n}, m = {m}.")
        problems = M.mennicke_violations(g, q)
        if problems:
            raise MembershipError(f"Input is not in E({n},Z;{q}).", problems)
        if n == m:
            identity = SquareIntMatrix.identity(n)
            factors = (
                ClassifiedFactor('L', identity),
                ClassifiedFactor('U', identity),
                ClassifiedFactor('L', identity),
                ClassifiedFactor('Eblock', g, block_size=m),
                ClassifiedFactor('U', identity),
            )
            return FactorCertificate(g, q, factors)

        step = FactorizationService.peel_once(g, q)
        inner = FactorizationService.factor_E(step.reduced, q, m)
        lam1, ups1, lam2, eblock, ups2 = (f.matrix.embed(n, 2) for f in inner.factors)
        C1, R, C2, R2 = step.c1.inverse(), step.r.inverse(), step.c2.inverse(), step.r2.inverse()
        lam1_inv, ups1_inv = lam1.inverse(), ups1.inverse()
        factors = (
            ClassifiedFactor('L', C1 * lam1),
            ClassifiedFactor('U', lam1_inv * R * lam1 * ups1),
            ClassifiedFactor('L', ups1_inv * lam1_inv * C2 * lam1 * ups1 * lam2),
            ClassifiedFactor('Eblock', eblock, block_size=m),
            ClassifiedFactor('U', ups2 * R2),
        )
        certificate = FactorCertificate(g, q, factors)
        CertificateService.verify_certificate(certificate)
        logger.debug(f"factor_E: n={n} peeled to block of size {m}")
        return certificate

    @staticmethod
    def _two_pair_split(g: SquareIntMatrix, q, limit_bits):
        """
        (u1, l1, u2, l2) with g = u1·l1·u2·l2, or None.

        Level-q row operations from U_3 on the left and column operations from
        L_3 on the right bring g to a matrix z with z_11 = 1 and leading 2×2
        minor 1; such a z splits as l1·u2.
        """
        qq = q * q
        E = M.elementary
        tried = 0
        for c, d in _small_pairs(_SPLIT_BOX):
            right = E(3, 2, 1, q * c) * E(3, 3, 1, q * d)
            z0 = g * right
            alpha, beta = z0.entry(2, 1) // q, z0.entry(3, 1) // q
            if gcd(alpha, beta) != 1:
                continue
            tried += 1
            if tried > _SPLIT_COLUMN_TRIES:
                break
            (x, y), _ = _bezout([alpha, beta])
            s = (1 - z0.entry(1, 1)) // qq

            def row_op(k):
                return E(3, 1, 2, q * (x * s + k * beta)) * E(3, 1, 3, q * (y * s - k * alpha))

            for k in _shift_candidates(lambda k: _corner_minor(row_op(k) * z0)):
                left = row_op(k)
                z = left * z0
                if _max_bits(z) > limit_bits:
                    continue
                minor = z.entry(2, 2) - z.entry(1, 2) * z.entry(2, 1)
                solution = _solve_bilinear(
                    (minor - 1) // qq,
                    (z.entry(3, 2) - z.entry(1, 2) * z.entry(3, 1)) // q,
                    (z.entry(2, 3) - z.entry(2, 1) * z.entry(1, 3)) // q,
                    _corner_minor(z),
                )
                if solution is None:
                    continue
                e, f = solution
                upper = E(3, 2, 3, q * e) * left
                lower = right * E(3, 3, 2, q * f)
                split = FactorizationService.split_ul((upper * g * lower).inverse(), q)
                if split is None:
                    continue
                u2_inv, l1_inv = split
                u1, l1, u2, l2 = upper.inverse(), l1_inv.inverse(), u2_inv.inverse(), lower.inverse()
                if u1 * l1 * u2 * l2 == g:
                    return u1, l1, u2, l2
        return None

    @staticmethod
    def _short_alternating(g: SquareIntMatrix, q, limit_bits):
        """Alternating factors of g with at most four terms, or None."""
        if g.is_identity():
            return []
        if M.in_U(g, q):
            return [ClassifiedFactor('U', g)]
        if M.in_L(g, q):
            return [ClassifiedFactor('L', g)]
        split = FactorizationService.split_ul(g, q)
        if split is not None:
            return _alternate(zip('UL', split))
        split = FactorizationService.split_ul(g.inverse(), q)
        if split is not None:
            return _alternate(zip('LU', (x.inverse() for x in reversed(split))))
        # u·l·u·l for a symmetric image of g, mapped back; the flipped images give l·u·l·u
        views = (
            ('LULU', _flip, lambda found: [_flip(x) for x in found]),
            ('LULU', lambda x: _flip(x).transpose(), lambda found: [_flip(x).transpose() for x in reversed(found)]),
            ('ULUL', lambda x: x, list),
            ('ULUL', SquareIntMatrix.transpose, lambda found: [x.transpose() for x in reversed(found)]),
        )
        for kinds, view, back in views:
            found = FactorizationService._two_pair_split(view(g), q, limit_bits)
            if found is not None:
                return _alternate(zip(kinds, back(found)))
        return None

    @staticmethod
    def alternating_factor3(g: SquareIntMatrix, q, max_len=None, max_pairs=None) -> AlternatingResult:
        """
        Alternating U/L factorization of g in E(3,Z;q) with at most max_len
        factors and, when max_pairs is given, at most that many U·L pairs once
        a leading L and a trailing U are split off.

        Products of up to four terms are solved for directly. Before that, g is
        shrunk by an outer L on the left and an outer U on the right; the
        search then wraps it in further fixed level-q factors of the same kind
        and in U·L pairs placed in front. A failed search is reported in the
        result, never raised.
        """
        q = CongruenceLevel.coerce(q).q
        max_len = max_len or settings.LAB_MAX_LEN
        if g.n != 3:
            raise PreconditionError(f"alternating_factor3 needs a 3×3 matrix, got {g.n}×{g.n}.")
        if not M.mennicke_in_E(g, q):
            logger.warning(f"alternating_factor3: {_describe(g)} is not in E(3,Z;{q})")
            return AlternatingResult(False, residual=g, reason=f"not in E(3,Z;{q})")
        pair_cap = max_len // 2 if max_pairs is None else max_pairs
        reduce_l, reduced, reduce_u = _size_reduce(g, q)
        limit_bits = 4 * _max_bits(reduced) + _ENTRY_SLACK_BITS
        outers = _outer_twists(q)
        attempts = 0
        factors = None
        for depth in range(max(1, pair_cap - 1)):
            wrappers = itertools.product(itertools.product(_twists(q), repeat=depth), outers)
            for prefix, (outer_l, outer_u) in itertools.islice(wrappers, _WRAPPERS_PER_DEPTH):
                attempts += 1
                head = [m for pair in prefix for m in pair]
                rest = M.product([outer_l] + head, 3).inverse() * reduced * outer_u.inverse()
                tail = FactorizationService._short_alternating(rest, q, limit_bits)
                if tail is None:
                    continue
                candidate = _alternate(
                    [('L', reduce_l * outer_l)] + list(zip('UL' * depth, head))
                    + [(f.kind, f.matrix) for f in tail] + [('U', outer_u * reduce_u)]
                )
                if len(candidate) <= max_len and (max_pairs is None or _core_pairs(candidate) <= max_pairs):
                    factors = candidate
                    break
            if factors is not None:
                break
        if factors is None:
            reason = f"no alternating product within {max_len} factors found in {attempts} attempts"
            logger.warning(f"alternating_factor3: {reason} for {_describe(g)}")
            return AlternatingResult(False, residual=g, attempts=attempts, reason=reason)
        if M.product([f.matrix for f in factors], 3) != g:
            raise CertificateError("Alternating factorization does not reproduce its input.")
        logger.debug(f"alternating_factor3: length {len(factors)} after {attempts} attempts")
        return AlternatingResult(True, factors=factors, residual=SquareIntMatrix.identity(3), attempts=attempts)

    @staticmethod
    def factor_LU3U(g: SquareIntMatrix, q, max_len=None) -> FactorCertificate:
        """
        Certificate L,Uc,Uc,Uc,U for g in E(n,Z;q). Raises SoftFailure when the
        3×3 residual block has no alternating factorization with at most
        n // 3 U·L pairs within the search.
        """
        q = CongruenceLevel.coerce(q).q
        n = g.n
        cert_e = FactorizationService.factor_E(g, q, 3)
        L1, U1, L2, E, U2 = (f.matrix for f in cert_e.factors)
        block = E.block(n - 2, 3)

        room = n // 3
        max_len = min(max_len or settings.LAB_MAX_LEN, 2 * room + 2)
        alternating = FactorizationService.alternating_factor3(block, q, max_len, max_pairs=room)
        if not alternating.success:
            raise SoftFailure(
                f"Residual block {_describe(block)} did not factor: {alternating.reason}.",
                [
                    {"field": "residual_block", "message": _describe(block)},
                    {"field": "attempts", "message": str(alternating.attempts)},
                ],
            )
        # an outer L of the block joins L2 and an outer U joins U2
        core = list(alternating.factors)
        identity3 = SquareIntMatrix.identity(3)
        outer_l = core.pop(0).matrix if core and core[0].kind == 'L' else identity3
        outer_u = core.pop().matrix if core and core[-1].kind == 'U' else identity3
        L2 = L2 * outer_l.embed(n, n - 2)
        U2 = outer_u.embed(n, n - 2) * U2
        pairs = [(core[i].matrix, core[i + 1].matrix) for i in range(0, len(core), 2)]
        if not pairs:
            pairs = [(identity3, identity3)]
        if 3 * len(pairs) > n:
            raise SoftFailure(
                f"Residual block needs {len(pairs)} U·L pairs but n = {n} only fits {room}.",
                [{"field": "residual_block", "message": _describe(block)}],
            )

        corner = FactorizationService.corner_factor(pairs, q, corner='bottom', n=n)
        L3, Uc, U3, L4 = corner.factors
        L23 = L2 * L3.matrix
        L23_inv = L23.inverse()
        s = _signed_reversal(n)
        s_inv = s.inverse()
        U3_inv = U3.matrix.inverse()
        factors = (
            ClassifiedFactor('L', L1 * L23),
            ClassifiedFactor('Uc', L23_inv * U1 * L23, h=L23_inv, k=U1),
            Uc,
            ClassifiedFactor('Uc', U3.matrix * L4.matrix * U3_inv, h=U3.matrix * s, k=s_inv * L4.matrix * s),
            ClassifiedFactor('U', U3.matrix * U2),
        )
        certificate = FactorCertificate(g, q, factors, notes=(f"residual block alternating length {alternating.length}",))
        CertificateService.verify_certificate(certificate)
        return certificate
