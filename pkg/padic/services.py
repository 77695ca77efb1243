import logging
import random

from django.conf import settings
from sympy import factorint

from finite_lab.lie import LieService
from finite_lab.models import SymSet
from finite_lab.services import GroupTableService, ValueSetService
from matrix_core.models import ModMatrix, SquareIntMatrix, TruncatedPadicMatrix
from matrix_core.services import MatrixService, ModularLinearAlgebra
from words.models import Word
from words.services import WordService
from wordwidth.exceptions import (
    CertificateError, LabError, PreconditionError, RankDeficiencyError,
)
from .models import (
    GroupLift, LiftCertificate, LiftFactor, LiftSample, NewtonResult, PolyMapDescriptor, WidthBoundReport,
)

logger = logging.getLogger(__name__)

LA = ModularLinearAlgebra

# word values spent on the coset g·h·SL_n(Z/p^K; p) and on reaching it mod p
COSET_VALUES = 4
RESIDUE_VALUES = 3


def prime_power(m):
    """(p, K) with m = p^K."""
    factors = factorint(m)
    if len(factors) != 1:
        raise PreconditionError(f"Modulus {m} is not a prime power.")
    (p, K), = factors.items()
    return p, K


def _identity(n, p, K):
    return TruncatedPadicMatrix.of(ModMatrix.identity(n, p).rows, p, K)


def residual_valuation(values, p, K):
    return min((LA.valuation(x, p, K) for x in values), default=K)


class PadicService:

    @staticmethod
    def pval(f: PolyMapDescriptor, p):
        return f.pval(p)

    @staticmethod
    def linear_solve_mod(M, v, p, K, min_valuation=0):
        """ε ≡ 0 mod p^min_valuation with M·ε ≡ v (mod p^K), or None."""
        scale = p ** min_valuation
        mod = p ** K
        scaled = [[scale * x % mod for x in row] for row in M]
        e = LA.solve(scaled, v, p, K)
        if e is None:
            return None
        return [scale * x % mod for x in e]

    @staticmethod
    def newton_lift(f: PolyMapDescriptor, a, b, p, k, K) -> NewtonResult:
        """
        Lifts a to a* with f(a*) ≡ b (mod p^K). Needs pval(f) >= k and
        f(a) ≡ b mod p^(k+1); each step solves p^-k·df(a)·e ≡ residual/p^v mod p
        and moves by p^(v-k)·e, so the residual valuation strictly increases.
        """
        mod = p ** K
        if f.pval(p) < k:
            raise PreconditionError(f"pval(f) = {f.pval(p)} is below k = {k}.")
        if len(b) != f.target_arity:
            raise PreconditionError(f"Target has {len(b)} coordinates, the map has {f.target_arity}.")
        point = [x % mod for x in a]
        trace, valuations = [tuple(point)], []
        while True:
            residual = [(y - z) % mod for y, z in zip(b, f.evaluate(point, mod))]
            v = residual_valuation(residual, p, K)
            if valuations and v <= valuations[-1]:
                raise CertificateError(f"Residual valuation stalled at {v}.")
            valuations.append(v)
            if v >= K:
                break
            if v < k + 1:
                raise PreconditionError(f"‖f(a) − b‖ has valuation {v}; need at least {k + 1}.")
            J = [[(x // p ** k) % p for x in row] for row in f.jacobian_at(point, mod)]
            rhs = [(x // p ** v) % p for x in residual]
            e = LA.solve(J, rhs, p, 1)
            if e is None:
                rank = LA.rank_mod_p(J, p)
                raise RankDeficiencyError(
                    f"Differential has rank {rank} mod p at {tuple(point)}; need {f.target_arity}.",
                    rank=rank, expected=f.target_arity,
                )
            step = p ** (v - k)
            point = [(x + step * y) % mod for x, y in zip(point, e)]
            trace.append(tuple(point))
            logger.debug(f"newton_lift: valuation {v}, point {tuple(point)}")
        return NewtonResult(point=tuple(point), trace=tuple(trace), valuations=tuple(valuations))

    @staticmethod
    def phi_map(g, h) -> PolyMapDescriptor:
        """
        (x, y) ↦ x⁻¹gx·y⁻¹hy on the n² + n² matrix coordinates, x⁻¹ written as
        the adjugate (valid on SL_n). Coordinates are x11..xnn then y11..ynn.
        """
        n = g.n
        names = [f"x{i}{j}" for i in range(1, n + 1) for j in range(1, n + 1)]
        names += [f"y{i}{j}" for i in range(1, n + 1) for j in range(1, n + 1)]
        f = PolyMapDescriptor.from_exprs([], names)
        gens = f.ring.gens
        X = [list(gens[i * n:(i + 1) * n]) for i in range(n)]
        Y = [list(gens[n * n + i * n:n * n + (i + 1) * n]) for i in range(n)]
        R = f.ring
        G = [[R(x) for x in row] for row in g.rows]
        H = [[R(x) for x in row] for row in h.rows]
        left = _poly_mul(_poly_mul(_poly_adjugate(X, R), G, R), X, R)
        right = _poly_mul(_poly_mul(_poly_adjugate(Y, R), H, R), Y, R)
        product = _poly_mul(left, right, R)
        return PolyMapDescriptor(R, tuple(p for row in product for p in row))

    @staticmethod
    def level_k(X: SymSet):
        """Least i with some g ∈ X not scalar mod p^(i+1); None when all of X is scalar mod p^K."""
        table = X.table
        p, K = prime_power(table.modulus)
        n = table.n
        members = [table.elements[k] for k in X]
        for i in range(K):
            mod = p ** (i + 1)
            for flat in members:
                if not ModMatrix.from_flat(flat, n, mod).is_scalar():
                    return i
        return None

    @staticmethod
    def padic_width_bound(X: SymSet, budget=None) -> WidthBoundReport:
        """
        Bound on the closure exponent of a symmetric, conjugation-invariant X
        in SL_n(Z/p^K): 3·C₁ when X is non-central mod p (C₁ its exponent
        mod p), 5·(n²−1)(p−1) + n when X first leaves the centre at level
        k > 0. The BFS oracle always runs on a conjugation-invariant X, whose
        walk visits one element per conjugacy class; other sets are walked
        element by element when that fits the budget.
        """
        budget = budget or settings.LAB_BUDGET_TUPLES
        table = X.table
        n = table.n
        p, K = prime_power(table.modulus)
        if n < 3:
            raise PreconditionError(f"padic_width_bound needs n >= 3, got {n}.")
        if len(X) == len(table):
            return WidthBoundReport(case='whole', k=PadicService.level_k(X), bound=1, oracle=1, verified=True)
        if not X.is_symmetric():
            raise PreconditionError("X must be symmetric.")
        k = PadicService.level_k(X)
        if k is None:
            case, bound = 'central', ValueSetService.closure_exponent(X)
        elif k == 0:
            reduced = GroupTableService.enumerate_group(n, p)
            ords = {reduced.ordinal(ModMatrix.from_flat(table.elements[e], n, p)) for e in X}
            c1 = ValueSetService.closure_exponent(SymSet.of(reduced, ords))
            case, bound = 'covering', 3 * c1
        else:
            case, bound = 'lie-algebra', 5 * (n * n - 1) * (p - 1) + n

        oracle, verified = None, False
        if X.conjugation_invariant or _closure_fits(X, budget):
            oracle = ValueSetService.closure_exponent(X)
            verified = oracle <= bound
            if not verified:
                logger.warning(f"padic_width_bound: oracle {oracle} exceeds the {case} bound {bound}")
        else:
            logger.info(f"padic_width_bound: oracle skipped, walking ⟨X⟩ exceeds budget {budget}")
        return WidthBoundReport(case=case, k=k, bound=bound, oracle=oracle, verified=verified)


def _closure_fits(X: SymSet, budget):
    """True when a BFS of ⟨X⟩ by right multiplication finishes within `budget` products."""
    table = X.table
    members = list(X)
    seen = {0}
    frontier = [0]
    work = 0
    while frontier:
        nxt = []
        for y in frontier:
            work += len(members)
            if work > budget:
                return False
            for x in members:
                z = table.mul(y, x)
                if z not in seen:
                    seen.add(z)
                    nxt.append(z)
        frontier = nxt
    return True


def _poly_mul(A, B, R):
    n = len(A)
    return [[sum((A[i][k] * B[k][j] for k in range(n)), R.zero) for j in range(n)] for i in range(n)]


def _poly_det(A, R):
    n = len(A)
    if n == 1:
        return A[0][0]
    total = R.zero
    for j in range(n):
        minor = [row[:j] + row[j + 1:] for row in A[1:]]
        term = A[0][j] * _poly_det(minor, R)
        total = total + term if j % 2 == 0 else total - term
    return total


def _poly_adjugate(A, R):
    n = len(A)
    if n == 1:
        return [[R.one]]
    adj = [[R.zero] * n for _ in range(n)]
    for i in range(n):
        for j in range(n):
            minor = [row[:i] + row[i + 1:] for k, row in enumerate(A) if k != j]
            cofactor = _poly_det(minor, R)
            adj[i][j] = cofactor if (i + j) % 2 == 0 else -cofactor
    return adj


class GroupNewtonService:
    """Newton iteration for x⁻¹gx·y⁻¹hy = target inside SL_n(Z/p^K)."""

    @staticmethod
    def lift_pair(g, h, target, p, K) -> GroupLift:
        """
        Starts at x = y = I. With ρ = (x⁻¹gx·y⁻¹hy)⁻¹·target ≡ I mod p^v, solves
        the differential at (G, H) = (x⁻¹gx, y⁻¹hy) against (ρ − I)/p^v mod p
        and updates x ← x(I + p^v·δ₁), y ← y(I + p^v·δ₂) with trace-zero δ.
        """
        n = g.n
        g, h, target = (TruncatedPadicMatrix.of(m.rows, p, K) for m in (g, h, target))
        identity = _identity(n, p, K)
        basis = LieService.sl_basis(n, p)
        dim = len(basis)
        x, y = identity, identity
        valuations = []
        for _ in range(K + 1):
            G, H = x.inverse() * g * x, y.inverse() * h * y
            rho = (G * H).inverse() * target
            delta = (rho - identity).flat
            v = residual_valuation(delta, p, K)
            valuations.append(v)
            if v >= K:
                return GroupLift(x=x, y=y, valuations=tuple(valuations))
            if v == 0:
                raise PreconditionError("Target is not congruent to g·h modulo p.")
            images = LieService.diff_images(ModMatrix(G.rows, p), ModMatrix(H.rows, p), p)
            system = [[images[c][r] for c in range(2 * dim)] for r in range(n * n)]
            e = LA.solve(system, [(t // p ** v) % p for t in delta], p, 1)
            if e is None:
                rank = LA.rank_mod_p(images, p)
                raise RankDeficiencyError(
                    f"Differential at (g, h) has rank {rank} mod {p}; need {dim}.", rank=rank, expected=dim,
                )
            step = p ** v
            d1 = _combine(basis, e[:dim], n)
            d2 = _combine(basis, e[dim:], n)
            x = x * TruncatedPadicMatrix.of(_shifted(d1, step), p, K)
            y = y * TruncatedPadicMatrix.of(_shifted(d2, step), p, K)
        raise CertificateError(f"Lift did not converge in {K} steps.")


def _combine(basis, coeffs, n):
    rows = [[0] * n for _ in range(n)]
    for E, c in zip(basis, coeffs):
        if c:
            for i in range(n):
                for j in range(n):
                    e = E.rows[i][j]
                    if e:
                        # basis entries are ±1, stored mod p
                        rows[i][j] += c * (1 if e == 1 else -1)
    return rows


def _shifted(d, step):
    n = len(d)
    return [[(1 if i == j else 0) + step * d[i][j] for j in range(n)] for i in range(n)]


class CoverService:

    @staticmethod
    def find_base_tuples(w: Word, table, rng, attempts=None):
        """
        Four argument tuples with a = w(t1)w(t2), b = w(t3)w(t4) generating the
        table and with onto differential, drawn deterministically from `rng`.
        """
        attempts = attempts or settings.LAB_BUDGET_SAMPLES
        ops = ValueSetService.table_ops(table)
        n, size, d = table.n, len(table), w.arity
        target_rank = n * n - 1
        for attempt in range(attempts):
            tuples = [tuple(rng.randrange(size) for _ in range(d)) for _ in range(4)]
            values = [WordService.evaluate(w, t, ops) for t in tuples]
            a, b = table.mul(values[0], values[1]), table.mul(values[2], values[3])
            if not GroupTableService.generates(a, b, table):
                continue
            if LieService.diff_rank(table.element(a), table.element(b)) != target_rank:
                continue
            logger.info(f"find_base_tuples: base pair after {attempt + 1} draws")
            return tuples
        return None

    @staticmethod
    def _lift_tuple(table, ordinals, p, K):
        return tuple(TruncatedPadicMatrix.of(table.lift(k).rows, p, K) for k in ordinals)

    @staticmethod
    def _random_element(n, p, K, rng, level=1):
        """Seeded product of elementaries e_{i,j}(level·r) mod p^K."""
        mod = p ** K
        g = _identity(n, p, K)
        for _ in range(3 * n * n):
            i, j = rng.sample(range(1, n + 1), 2)
            e = MatrixService.elementary(n, i, j, level * rng.randrange(mod))
            g = g * TruncatedPadicMatrix.of(e.rows, p, K)
        return g

    @staticmethod
    def _dispatch(g, h, targets, p, K):
        from .tasks import lift_sample_task
        handles = [
            lift_sample_task.delay({'g': g.format(), 'h': h.format(), 'target': t.format(), 'p': p, 'K': K})
            for t in targets
        ]
        return [handle.get() for handle in handles]

    @staticmethod
    def word_coset_cover(w: Word, n, p, K, samples=None, seed=None, full=False) -> LiftCertificate:
        """
        Samples targets in g·h·SL_n(Z/p^K; p) (or all of SL_n(Z/p^K) when
        `full`) and writes each as a product of word values: four from the
        lifted base pair, plus at most three values mod p when `full`.
        """
        samples = samples or settings.LAB_BUDGET_SAMPLES
        seed = settings.LAB_DEFAULT_SEED if seed is None else seed
        rng = random.Random(seed)
        if w.is_trivial():
            raise PreconditionError("The trivial word has no covering.")

        if len(w) == 1:
            # x_i^±1 takes every value
            records = []
            sign = w.letters[0][1]
            for _ in range(samples):
                s = CoverService._random_element(n, p, K, rng)
                argument = s if sign > 0 else s.inverse()
                factor = LiftFactor(tuple(argument for _ in range(w.arity)))
                records.append(LiftSample(target=s, factors=(factor,), residual_valuation=K, ok=True))
            certificate = LiftCertificate(
                word=w, n=n, p=p, K=K, seed=seed, exponent=1, status='PASS',
                samples=tuple(records), full=True, notes=('primitive word',),
            )
            CoverService.verify_lift_certificate(certificate)
            return certificate

        table = GroupTableService.enumerate_group(n, p)
        tuples = CoverService.find_base_tuples(w, table, rng)
        exponent = COSET_VALUES + RESIDUE_VALUES if full else COSET_VALUES
        if tuples is None:
            logger.warning(f"word_coset_cover: no generating pair for '{w}' in SL_{n}(F_{p})")
            return LiftCertificate(
                word=w, n=n, p=p, K=K, seed=seed, exponent=exponent, status='INCONCLUSIVE',
                full=full, notes=('no generating pair with onto differential found',),
            )
        base = tuple(CoverService._lift_tuple(table, t, p, K) for t in tuples)
        values = [WordService.evaluate(w, t) for t in base]
        g, h = values[0] * values[1], values[2] * values[3]

        witnesses, members = {}, []
        if full:
            witnesses = ValueSetService.value_witnesses(w, table, seed=seed)
            members = list(witnesses)
        gh_bar = table.ordinal(ModMatrix((g * h).rows, p))

        targets, prefixes, records = [], [], []
        for _ in range(samples):
            if full:
                s = CoverService._random_element(n, p, K, rng)
                u_bar = table.mul(table.ordinal(ModMatrix(s.rows, p)), table.inv(gh_bar))
                path = ValueSetService.express(members, u_bar, table, RESIDUE_VALUES)
                if path is None:
                    records.append(LiftSample(target=s, reason='no product of 3 values mod p'))
                    targets.append(None)
                    prefixes.append(None)
                    continue
                prefix = []
                u = _identity(n, p, K)
                for k in path:
                    tup, sign = witnesses[k]
                    elements = CoverService._lift_tuple(table, tup, p, K)
                    value = WordService.evaluate(w, elements)
                    u = u * (value if sign > 0 else value.inverse())
                    prefix.append(LiftFactor(elements, sign))
                targets.append(u.inverse() * s)
                prefixes.append((s, tuple(prefix)))
                records.append(None)
            else:
                t = g * h * CoverService._random_element(n, p, K, rng, level=p)
                targets.append(t)
                prefixes.append((t, ()))
                records.append(None)

        pending = [t for t in targets if t is not None]
        results = iter(CoverService._dispatch(g, h, pending, p, K))
        for index, t in enumerate(targets):
            if t is None:
                continue
            result = next(results)
            target, prefix = prefixes[index]
            if 'error' in result:
                records[index] = LiftSample(target=target, reason=result['error']['error']['message'])
                continue
            x = TruncatedPadicMatrix.of(SquareIntMatrix.parse(result['x']).rows, p, K)
            y = TruncatedPadicMatrix.of(SquareIntMatrix.parse(result['y']).rows, p, K)
            x_inv, y_inv = x.inverse(), y.inverse()
            coset = (
                LiftFactor(tuple(x_inv * e * x for e in base[0])),
                LiftFactor(tuple(x_inv * e * x for e in base[1])),
                LiftFactor(tuple(y_inv * e * y for e in base[2])),
                LiftFactor(tuple(y_inv * e * y for e in base[3])),
            )
            records[index] = LiftSample(
                target=target, factors=prefix + coset, residual_valuation=result['valuations'][-1],
                iterations=len(result['valuations']) - 1, ok=True,
            )

        status = 'PASS' if all(r.ok for r in records) else 'FAIL'
        certificate = LiftCertificate(
            word=w, n=n, p=p, K=K, seed=seed, exponent=exponent, status=status,
            g=g, h=h, base=base, samples=tuple(records), full=full,
        )
        CoverService.verify_lift_certificate(certificate)
        logger.info(f"word_coset_cover: {certificate.passed}/{len(records)} samples lifted, status {status}")
        return certificate

    @staticmethod
    def verify_lift_certificate(certificate: LiftCertificate):
        """Re-evaluates every recorded factor; raises CertificateError on any mismatch."""
        w, p, K, n = certificate.word, certificate.p, certificate.K, certificate.n
        mod = p ** K
        for index, sample in enumerate(certificate.samples):
            if not sample.ok:
                continue
            if len(sample.factors) > certificate.exponent:
                raise CertificateError(
                    f"Sample {index} uses {len(sample.factors)} values, more than {certificate.exponent}."
                )
            product = _identity(n, p, K)
            for factor in sample.factors:
                if any(e.modulus != mod or e.det != 1 for e in factor.elements):
                    raise CertificateError(f"Sample {index} has an argument outside SL_{n}(Z/{mod}).")
                value = WordService.evaluate(w, factor.elements)
                product = product * (value if factor.sign > 0 else value.inverse())
            if product.rows != sample.target.rows:
                raise CertificateError(f"Sample {index} does not multiply out to its target.")
        return True


def lift_payload(payload):
    """Runs one pair lift from a JSON-ready payload; errors come back as the error envelope."""
    from wordwidth.exceptions import build_error_payload
    p, K = payload['p'], payload['K']
    g, h, target = (SquareIntMatrix.parse(payload[key]) for key in ('g', 'h', 'target'))
    try:
        lifted = GroupNewtonService.lift_pair(g, h, target, p, K)
    except LabError as e:
        return {'error': build_error_payload(e)}
    return {'x': lifted.x.format(), 'y': lifted.y.format(), 'valuations': list(lifted.valuations)}
