from decomposition.constructions import ConstructionService
from decomposition.serializers import QWitnessSerializer
from matrix_core.services import MatrixService
from words.services import WordService
from wordwidth.exceptions import CertificateError
from cli.base import LabCommand


class Command(LabCommand):
    help = "Level q of the word's commutator witness and d = q², replaying the conjugation identity."
    required_flags = ('word',)

    def run(self, config, options):
        w = WordService.parse_word(config['word'])
        witness = ConstructionService.q_witness(w)

        value = WordService.evaluate(w, WordService.free_tuple(w.arity)).embed(3)
        commutator = witness.g.inverse() * witness.h.inverse() * witness.g * witness.h
        c = witness.conjugator
        if value != witness.g or commutator != witness.commutator:
            raise CertificateError(f"Witness for '{w}' does not re-evaluate.")
        if c * commutator * c.inverse() != MatrixService.elementary(3, 1, 3, witness.q):
            raise CertificateError(f"c·[g,h]·c⁻¹ is not e_(1,3)({witness.q}).")

        report = dict(QWitnessSerializer(witness).data, replay='PASS')
        self.emit(report)
