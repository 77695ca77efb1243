import itertools
import logging
import random
import struct
from collections import deque

from django.conf import settings
from sympy import factorint

from words.models import GroupOps, Word
from words.services import WordService
from wordwidth.exceptions import BudgetExceededError, PreconditionError, CertificateError
from .models import CoverCheck, FiniteGroupTable, SymSet, WidthEstimate, apply_elementary

logger = logging.getLogger(__name__)

_TABLE_MAGIC = b'WWT1'
_SET_MAGIC = b'WWS1'


class GroupTableService:

    @staticmethod
    def order_formula(n, m):
        """|SL_n(Z/m)| from the prime factorization of m."""
        if n < 1 or m < 2:
            raise PreconditionError(f"Need n >= 1 and m >= 2, got n={n}, m={m}.")
        order = 1
        for p, k in factorint(m).items():
            local = p ** ((k - 1) * (n * n - 1)) * p ** (n * (n - 1) // 2)
            for i in range(2, n + 1):
                local *= p ** i - 1
            order *= local
        return order

    @staticmethod
    def enumerate_group(n, m, budget=None) -> FiniteGroupTable:
        budget = budget or settings.LAB_BUDGET_ELEMENTS
        if n < 2 or m < 2:
            raise PreconditionError(f"enumerate_group needs n >= 2 and m >= 2, got n={n}, m={m}.")
        expected = GroupTableService.order_formula(n, m)
        if expected > budget:
            raise BudgetExceededError(
                f"SL_{n}(Z/{m}) has {expected} elements, over the budget of {budget}.",
                [{"field": "budget_elements", "message": str(budget)}],
            )
        generators = [(i, j, x) for i in range(n) for j in range(n) if i != j for x in (1, m - 1)]
        identity = tuple(1 if i == j else 0 for i in range(n) for j in range(n))
        elements = [identity]
        parents = [None]
        index = {identity: 0}
        queue = deque([0])
        while queue:
            k = queue.popleft()
            flat = elements[k]
            for g, (i, j, x) in enumerate(generators):
                nxt = apply_elementary(flat, n, m, i, j, x)
                if nxt not in index:
                    index[nxt] = len(elements)
                    elements.append(nxt)
                    parents.append((k, g))
                    queue.append(index[nxt])
            if k and k % 100000 == 0:
                logger.debug(f"enumerate_group: {len(elements)} of {expected} elements")
        if len(elements) != expected:
            raise CertificateError(f"Enumerated {len(elements)} elements but the order formula gives {expected}.")
        logger.info(f"Enumerated SL_{n}(Z/{m}): {expected} elements")
        return FiniteGroupTable(n, m, elements, parents, generators)

    @staticmethod
    def subgroup_closure(table, ordinals) -> SymSet:
        """⟨S⟩ by BFS; the result is a subgroup, hence symmetric."""
        gens = set()
        for k in ordinals:
            gens.add(k)
            gens.add(table.inv(k))
        gens.discard(0)
        seen = bytearray(len(table))
        seen[0] = 1
        queue = deque([0])
        while queue:
            k = queue.popleft()
            for g in gens:
                nxt = table.mul(k, g)
                if not seen[nxt]:
                    seen[nxt] = 1
                    queue.append(nxt)
        return SymSet(table, seen)

    @staticmethod
    def conjugation_closure(table, ordinals) -> SymSet:
        """Smallest symmetric, conjugation-invariant set containing the ordinals."""
        result = SymSet.empty(table, conjugation_invariant=True)
        queue = deque()
        for k in ordinals:
            for x in (k, table.inv(k)):
                if not result.bits[x]:
                    result.bits[x] = 1
                    queue.append(x)
        gens = table.generator_ordinals
        while queue:
            k = queue.popleft()
            for g in gens:
                nxt = table.conjugate(k, g)
                if not result.bits[nxt]:
                    result.bits[nxt] = 1
                    queue.append(nxt)
        return result

    @staticmethod
    def conjugacy_classes(table):
        """Class id of every ordinal, numbered in order of each class's smallest ordinal."""
        if table._class_ids is None:
            # conjugating by e_{i,j}(1) alone reaches every class member in a finite group
            gens = [g for g, (_, _, x) in zip(table.generator_ordinals, table.generators) if x == 1]
            ids = [-1] * len(table)
            count = 0
            for start in range(len(table)):
                if ids[start] >= 0:
                    continue
                ids[start] = count
                queue = deque([start])
                while queue:
                    k = queue.popleft()
                    for g in gens:
                        nxt = table.conjugate(k, g)
                        if ids[nxt] < 0:
                            ids[nxt] = count
                            queue.append(nxt)
                count += 1
            logger.debug(f"conjugacy_classes: {count} classes in {table!r}")
            table._class_ids = ids
        return table._class_ids

    @staticmethod
    def generates(a, b, table) -> bool:
        ords = [x if isinstance(x, int) else table.ordinal(x) for x in (a, b)]
        return len(GroupTableService.subgroup_closure(table, ords)) == len(table)

    @staticmethod
    def center(table) -> SymSet:
        """Scalars λ·I with λⁿ = 1 in Z/m."""
        n, m = table.n, table.modulus
        ords = []
        for lam in range(1, m):
            if pow(lam, n, m) == 1:
                flat = tuple(lam if i == j else 0 for i in range(n) for j in range(n))
                ords.append(table.index[flat])
        return SymSet.of(table, ords, conjugation_invariant=True)

    @staticmethod
    def dump_table(table) -> bytes:
        entry = 'H' if table.modulus <= 0xFFFF else 'I'
        size = table.n * table.n
        chunks = [_TABLE_MAGIC, struct.pack('<IIQc', table.n, table.modulus, len(table), entry.encode())]
        row = struct.Struct(f'<{size}{entry}')
        chunks.extend(row.pack(*flat) for flat in table.elements)
        link = struct.Struct('<qH')
        for parent in table.parents:
            chunks.append(link.pack(-1, 0) if parent is None else link.pack(*parent))
        return b''.join(chunks)

    @staticmethod
    def load_table(data: bytes) -> FiniteGroupTable:
        if data[:4] != _TABLE_MAGIC:
            raise PreconditionError("Not a group table dump.")
        header = struct.Struct('<IIQc')
        n, m, count, entry = header.unpack_from(data, 4)
        entry = entry.decode()
        offset = 4 + header.size
        row = struct.Struct(f'<{n * n}{entry}')
        elements = []
        for _ in range(count):
            elements.append(row.unpack_from(data, offset))
            offset += row.size
        link = struct.Struct('<qH')
        parents = []
        for _ in range(count):
            parent, gen = link.unpack_from(data, offset)
            parents.append(None if parent < 0 else (parent, gen))
            offset += link.size
        generators = [(i, j, x) for i in range(n) for j in range(n) if i != j for x in (1, m - 1)]
        return FiniteGroupTable(n, m, elements, parents, generators)

    @staticmethod
    def dump_symset(s: SymSet) -> bytes:
        flags = (1 if s.conjugation_invariant else 0) | (2 if s.approximate else 0)
        packed = bytearray((len(s.bits) + 7) // 8)
        for k in s:
            packed[k >> 3] |= 1 << (k & 7)
        header = struct.pack('<IIQB', s.table.n, s.table.modulus, len(s.table), flags)
        return _SET_MAGIC + header + bytes(packed)

    @staticmethod
    def load_symset(data: bytes, table) -> SymSet:
        if data[:4] != _SET_MAGIC:
            raise PreconditionError("Not a value set dump.")
        header = struct.Struct('<IIQB')
        n, m, count, flags = header.unpack_from(data, 4)
        if (n, m, count) != (table.n, table.modulus, len(table)):
            raise PreconditionError(
                f"Dump is for SL_{n}(Z/{m}) with {count} elements, table is SL_{table.n}(Z/{table.modulus})."
            )
        packed = data[4 + header.size:]
        bits = bytearray((packed[k >> 3] >> (k & 7)) & 1 for k in range(count))
        return SymSet(table, bits, conjugation_invariant=bool(flags & 1), approximate=bool(flags & 2))


class ValueSetService:

    @staticmethod
    def table_ops(table):
        return GroupOps(mul=table.mul, inv=table.inv, identity=table.identity)

    @staticmethod
    def value_set(w: Word, table, budget=None, samples=None, seed=None) -> SymSet:
        """
        All w-values and their inverses. Over budget, seeded samples are
        closed under conjugation and the set is flagged approximate.
        """
        budget = budget or settings.LAB_BUDGET_TUPLES
        d = w.arity
        if d == 0:
            return SymSet.of(table, [0], conjugation_invariant=True)
        ops = ValueSetService.table_ops(table)
        size = len(table)
        if size ** d <= budget:
            values = set()
            for tup in itertools.product(range(size), repeat=d):
                values.add(WordService.evaluate(w, tup, ops))
            return SymSet.of(table, values, conjugation_invariant=True)

        samples = samples or settings.LAB_BUDGET_SAMPLES
        rng = random.Random(settings.LAB_DEFAULT_SEED if seed is None else seed)
        logger.info(f"value_set: {size}^{d} tuples over budget {budget}; sampling {samples}")
        values = set()
        for _ in range(samples):
            values.add(WordService.evaluate(w, [rng.randrange(size) for _ in range(d)], ops))
        closed = GroupTableService.conjugation_closure(table, values)
        closed.approximate = True
        return closed

    @staticmethod
    def power_product(X: SymSet, k) -> SymSet:
        """(X ∪ {1})^k."""
        if k < 0:
            raise PreconditionError(f"Exponent must be non-negative, got {k}.")
        layers = ValueSetService._layers(X, limit=k)
        result = SymSet.of(X.table, [0], conjugation_invariant=X.conjugation_invariant, approximate=X.approximate)
        for layer in layers:
            for e in layer:
                result.bits[e] = 1
        return result

    @staticmethod
    def _layers(X: SymSet, limit=None):
        """
        Frontiers F_1, F_2, ... with (X∪{1})^k = {1} ∪ F_1 ∪ ... ∪ F_k, stopping
        at the first empty frontier or after `limit` layers.
        """
        table = X.table
        members = list(X)
        seen = bytearray(len(table))
        seen[0] = 1
        frontier = [0]
        layers = []
        while frontier and (limit is None or len(layers) < limit):
            nxt = []
            for y in frontier:
                for x in members:
                    z = table.mul(y, x)
                    if not seen[z]:
                        seen[z] = 1
                        nxt.append(z)
            if not nxt:
                break
            layers.append(nxt)
            frontier = nxt
        return layers

    @staticmethod
    def _class_layers(X: SymSet):
        """
        Number of layers of _layers(X) for a conjugation-invariant X, walking
        one representative per conjugacy class: the classes met by C·X are
        those of rep(C)·x for x in X.
        """
        table = X.table
        class_ids = GroupTableService.conjugacy_classes(table)
        members = list(X)
        reps = {class_ids[0]: 0}
        frontier = [class_ids[0]]
        layers = 0
        while frontier:
            nxt = []
            for c in frontier:
                for x in members:
                    z = table.mul(reps[c], x)
                    if class_ids[z] not in reps:
                        reps[class_ids[z]] = z
                        nxt.append(class_ids[z])
            if not nxt:
                break
            layers += 1
            frontier = nxt
        return layers

    @staticmethod
    def closure_exponent(X: SymSet) -> int:
        """Least k with X^k = X^(k+1); X^k is then ⟨X⟩."""
        if not X.is_symmetric():
            raise PreconditionError("closure_exponent needs a symmetric set.")
        if X.conjugation_invariant:
            return ValueSetService._class_layers(X)
        return len(ValueSetService._layers(X))

    @staticmethod
    def width(w: Word, table) -> int:
        X = ValueSetService.value_set(w, table)
        if X.approximate:
            logger.warning(f"width of '{w}' computed from a sampled value set; this is an upper bound")
        return ValueSetService.closure_exponent(X)

    @staticmethod
    def width_estimate(w: Word, table, X: SymSet = None) -> WidthEstimate:
        X = X or ValueSetService.value_set(w, table)
        exponent = ValueSetService.closure_exponent(X)
        closure = GroupTableService.subgroup_closure(table, list(X))
        lower = exponent
        if X.approximate:
            # a sample only certifies that the value set is non-trivial
            lower = 0 if X.is_trivial() else 1
        return WidthEstimate(
            lower=lower, upper=exponent, approximate=X.approximate,
            closure_size=len(closure), value_set_size=len(X),
        )

    @staticmethod
    def greedy_cover(X: SymSet, table=None) -> int:
        """Number of left translates t·X a greedy search needs to cover the group."""
        table = table or X.table
        members = list(X)
        if not members:
            raise PreconditionError("greedy_cover needs a non-empty set.")
        covered = bytearray(len(table))
        remaining = len(table)
        d = 0
        cursor = 0
        while remaining:
            while covered[cursor]:
                cursor += 1
            # translates containing the first uncovered element
            best, best_gain = None, -1
            for x in members:
                t = table.mul(cursor, table.inv(x))
                gain = sum(1 for y in members if not covered[table.mul(t, y)])
                if gain > best_gain:
                    best, best_gain = t, gain
            for y in members:
                z = table.mul(best, y)
                if not covered[z]:
                    covered[z] = 1
                    remaining -= 1
            d += 1
        return d

    @staticmethod
    def translate_cover_check(X: SymSet) -> CoverCheck:
        """d translates of X cover the group, so X^(4d+2) is already ⟨X⟩."""
        d = ValueSetService.greedy_cover(X)
        exponent = ValueSetService.closure_exponent(X)
        bound = 4 * d + 2
        return CoverCheck('translate-cover', d, bound, exponent, exponent <= bound, {"cover_size": d})

    @staticmethod
    def subgroup_index_check(X: SymSet, H: SymSet, K: SymSet) -> CoverCheck:
        """
        K ≤ H ≤ G subgroups with K ⊆ X and H·X = G: X^(4[H:K]) equals its square.
        """
        table = X.table
        if not X.is_symmetric():
            raise PreconditionError("X must be symmetric.")
        for name, S in (('H', H), ('K', K)):
            if GroupTableService.subgroup_closure(table, list(S)) != S:
                raise PreconditionError(f"{name} is not a subgroup.")
        if not K.issubset(H):
            raise PreconditionError("K is not contained in H.")
        if not K.issubset(X):
            raise PreconditionError("K is not contained in X.")
        hx = bytearray(len(table))
        members = list(X)
        for h in H:
            for x in members:
                hx[table.mul(h, x)] = 1
        if not all(hx):
            raise PreconditionError("H·X does not cover the group.")
        index = len(H) // len(K)
        exponent = ValueSetService.closure_exponent(X)
        bound = 4 * index
        return CoverCheck('subgroup-index', index, bound, exponent, exponent <= bound, {"index": index})

    @staticmethod
    def value_witnesses(w: Word, table, budget=None, samples=None, seed=None):
        """
        ordinal ↦ (tuple of ordinals, sign) with w(tuple)^sign equal to the
        element, for every value the exhaustive or sampled run reaches.
        """
        budget = budget or settings.LAB_BUDGET_TUPLES
        ops = ValueSetService.table_ops(table)
        size, d = len(table), w.arity
        if size ** d <= budget:
            tuples = itertools.product(range(size), repeat=d)
        else:
            rng = random.Random(settings.LAB_DEFAULT_SEED if seed is None else seed)
            count = samples or settings.LAB_BUDGET_SAMPLES
            tuples = (tuple(rng.randrange(size) for _ in range(d)) for _ in range(count))
        witnesses = {}
        for tup in tuples:
            value = WordService.evaluate(w, tup, ops)
            witnesses.setdefault(value, (tuple(tup), 1))
            witnesses.setdefault(table.inv(value), (tuple(tup), -1))
        return witnesses

    @staticmethod
    def express(members, target, table, max_factors):
        """Ordinals x_1..x_k (k <= max_factors) from `members` with x_1···x_k = target, or None."""
        if target == 0:
            return []
        parents = {0: None}
        frontier = [0]
        for _ in range(max_factors):
            nxt = []
            for y in frontier:
                for x in members:
                    z = table.mul(y, x)
                    if z not in parents:
                        parents[z] = (y, x)
                        nxt.append(z)
            if target in parents:
                path = []
                while parents[target] is not None:
                    target, x = parents[target]
                    path.append(x)
                return path[::-1]
            frontier = nxt
        return None
