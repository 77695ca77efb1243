from dataclasses import dataclass

from decomposition.models import CONGRUENCE_SEQUENCE
from padic.services import COSET_VALUES, RESIDUE_VALUES

# word values in [g,h] = g⁻¹·(h⁻¹gh)
COMMUTATOR_VALUES = 2


@dataclass(frozen=True)
class ConstantRow:
    name: str
    value: int
    formula: str
    source: str


class ConstantChainService:

    @staticmethod
    def rows():
        """How many word values each step spends, from e_{1,3}(q) up to SL_n(Z)."""
        capture = COMMUTATOR_VALUES
        # residue class 1 of the superdiagonal needs two block embeddings, classes 2 and 0 one each
        cover = 2 * capture + capture + capture
        unipotent = cover + cover
        factors = len(CONGRUENCE_SEQUENCE)
        congruence = unipotent * factors
        adelic = RESIDUE_VALUES + COSET_VALUES
        return [
            ConstantRow(
                'commutator capture', capture, '[g,h] = g^-1 (h^-1 g h)',
                'q_witness: every power of e_{1,3}(q) is a conjugate of [g,h^k]',
            ),
            ConstantRow(
                'tridiagonal cover', cover, f'{2 * capture} + {capture} + {capture}',
                'tridiagonal_cover: one U_n(Z;q) factor per superdiagonal residue class mod 3',
            ),
            ConstantRow(
                'unipotent capture', unipotent, f'{cover} + {cover}',
                'unipotent_capture: h = f^-1 (fh) with fh conjugate to the standard unipotent',
            ),
            ConstantRow(
                'factor count', factors, ','.join(CONGRUENCE_SEQUENCE),
                'factor_LU3U: certificate classes for E(n,Z;q)',
            ),
            ConstantRow(
                'congruence bound', congruence, f'{unipotent} x {factors}',
                'each certificate factor is a conjugate of U_n(Z;q) or L_n(Z;q)',
            ),
            ConstantRow(
                'adelic exponent', adelic, f'{RESIDUE_VALUES} + {COSET_VALUES}',
                'word_coset_cover(full=True): values mod p, then the lifted coset',
            ),
            ConstantRow(
                'global bound', congruence + adelic, f'{congruence} + {adelic}',
                'congruence bound on SL_n(Z;q) plus the adelic exponent for SL_n(Z/q)',
            ),
        ]
