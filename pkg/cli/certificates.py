"""
JSON certificate files: {kind, seed, sha256, digests, body}.

`sha256` covers the canonical body and `digests` holds one checksum per
factor (or per sample), so a tampered file can be traced to the entry that
changed. Replay never trusts the checksums alone: every file is re-verified
by exact arithmetic.
"""
import hashlib
import json
import logging
from dataclasses import dataclass, field

from rest_framework.exceptions import ValidationError

from decomposition.serializers import FactorCertificateSerializer
from decomposition.services import CertificateService
from matrix_core.models import SquareIntMatrix, TruncatedPadicMatrix
from padic.serializers import LiftCertificateSerializer
from padic.services import CoverService, residual_valuation
from words.services import WordService
from wordwidth.exceptions import CertificateError, build_error_payload
from .serializers import CertificateEnvelopeSerializer

logger = logging.getLogger(__name__)

# kind -> (body serializer, list of itemised entries, label, first index)
KINDS = {
    'factor': (FactorCertificateSerializer, 'factors', 'factor', 1),
    'lift': (LiftCertificateSerializer, 'samples', 'sample', 0),
}


def canonical(data) -> str:
    return json.dumps(data, sort_keys=True, separators=(',', ':'), ensure_ascii=False)


def digest(data) -> str:
    return hashlib.sha256(canonical(data).encode('utf-8')).hexdigest()


def seal(kind, certificate, seed=None):
    serializer_class, items, _, _ = KINDS[kind]
    body = json.loads(json.dumps(serializer_class(certificate).data))
    return {
        'kind': kind,
        'seed': seed,
        'sha256': digest(body),
        'digests': [digest(item) for item in body.get(items, [])],
        'body': body,
    }


def dumps(document) -> str:
    return json.dumps(document, indent=2, sort_keys=True, ensure_ascii=False) + '\n'


@dataclass
class ReplayReport:
    path: str
    kind: str = ''
    problems: list = field(default_factory=list)
    summary: str = ''

    @property
    def passed(self):
        return not self.problems


def _checksum_problems(document):
    _, items, label, first = KINDS[document['kind']]
    body = document['body']
    problems = []
    if digest(body) != document['sha256']:
        problems.append("body checksum mismatch")
    entries = body.get(items, [])
    recorded = document['digests']
    if len(recorded) != len(entries):
        problems.append(f"{len(entries)} {items} but {len(recorded)} checksums")
    for index, (entry, expected) in enumerate(zip(entries, recorded), start=first):
        if digest(entry) != expected:
            problems.append(f"{label} {index}: checksum mismatch")
    return problems


def _replay_factor(certificate):
    problems = CertificateService.certificate_problems(certificate)
    return problems, f"{certificate.class_sequence} over q={certificate.q}"


def _replay_lift(certificate):
    p, K, mod = certificate.p, certificate.K, certificate.p ** certificate.K
    problems, valuations = [], []
    for index, sample in enumerate(certificate.samples):
        if not sample.ok:
            continue
        product = TruncatedPadicMatrix.of(SquareIntMatrix.identity(certificate.n).rows, p, K)
        for factor in sample.factors:
            value = WordService.evaluate(certificate.word, factor.elements)
            product = product * (value if factor.sign > 0 else value.inverse())
        residual = residual_valuation(
            [(a - b) % mod for row_a, row_b in zip(product.rows, sample.target.rows) for a, b in zip(row_a, row_b)],
            p, K,
        )
        if residual < K:
            problems.append(f"sample {index}: residual valuation {residual} below {K}")
        valuations.append(residual)
    if not problems:
        try:
            CoverService.verify_lift_certificate(certificate)
        except CertificateError as e:
            problems.append(e.message)
    if certificate.status == 'PASS' and certificate.passed != len(certificate.samples):
        problems.append(f"status PASS but only {certificate.passed} of {len(certificate.samples)} samples lifted")
    summary = (
        f"{certificate.passed}/{len(certificate.samples)} samples, residual valuation "
        f"{min(valuations, default=K)} at K={K}, status {certificate.status}"
    )
    return problems, summary


REPLAYERS = {'factor': _replay_factor, 'lift': _replay_lift}


def replay(path) -> ReplayReport:
    report = ReplayReport(path=str(path))
    try:
        with open(path, encoding='utf-8') as fh:
            raw = json.load(fh)
    except (OSError, ValueError) as e:
        report.problems.append(f"parse error: {e}")
        return report

    envelope = CertificateEnvelopeSerializer(data=raw)
    if not envelope.is_valid():
        report.problems.extend(
            f"{d['field']}: {d['message']}"
            for d in build_error_payload(ValidationError(envelope.errors))['error']['details']
        )
        return report
    document = envelope.validated_data
    report.kind = document['kind']
    report.problems.extend(_checksum_problems(document))

    serializer_class = KINDS[report.kind][0]
    body = serializer_class(data=document['body'])
    if not body.is_valid():
        report.problems.extend(
            f"{d['field']}: {d['message']}"
            for d in build_error_payload(ValidationError(body.errors))['error']['details']
        )
        return report
    problems, report.summary = REPLAYERS[report.kind](body.save())
    report.problems.extend(problems)
    logger.debug(f"replay {path}: kind={report.kind} problems={len(report.problems)}")
    return report
