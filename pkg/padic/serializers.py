from rest_framework import serializers

from matrix_core.models import TruncatedPadicMatrix
from matrix_core.serializers import MatrixField
from words.serializers import WordField
from .models import LiftCertificate, LiftFactor, LiftSample


class LiftFactorSerializer(serializers.Serializer):
    elements = serializers.ListField(child=MatrixField())
    sign = serializers.ChoiceField(choices=[1, -1], default=1)


class LiftSampleSerializer(serializers.Serializer):
    target = MatrixField()
    factors = LiftFactorSerializer(many=True, required=False, default=list)
    residual_valuation = serializers.IntegerField(min_value=0)
    iterations = serializers.IntegerField(min_value=0)
    ok = serializers.BooleanField()
    reason = serializers.CharField(required=False, allow_blank=True, default='')


class LiftCertificateSerializer(serializers.Serializer):
    """Header (word, n, p, K, seed), base pair, then one record per sample."""
    word = WordField()
    n = serializers.IntegerField(min_value=2)
    p = serializers.IntegerField(min_value=2)
    K = serializers.IntegerField(min_value=1)
    seed = serializers.IntegerField()
    exponent = serializers.IntegerField(min_value=1)
    status = serializers.ChoiceField(choices=['PASS', 'FAIL', 'INCONCLUSIVE'])
    full = serializers.BooleanField(default=False)
    g = MatrixField(required=False, allow_null=True, default=None)
    h = MatrixField(required=False, allow_null=True, default=None)
    base = serializers.ListField(child=serializers.ListField(child=MatrixField()), required=False, default=list)
    samples = LiftSampleSerializer(many=True)
    notes = serializers.ListField(child=serializers.CharField(), required=False, default=list)

    def create(self, validated_data):
        p, K = validated_data['p'], validated_data['K']

        def truncate(m):
            return None if m is None else TruncatedPadicMatrix.of(m.rows, p, K)

        samples = tuple(
            LiftSample(
                target=truncate(s['target']),
                factors=tuple(
                    LiftFactor(tuple(truncate(e) for e in f['elements']), f['sign']) for f in s.get('factors', [])
                ),
                residual_valuation=s['residual_valuation'],
                iterations=s['iterations'],
                ok=s['ok'],
                reason=s.get('reason', ''),
            )
            for s in validated_data['samples']
        )
        return LiftCertificate(
            word=validated_data['word'], n=validated_data['n'], p=p, K=K,
            seed=validated_data['seed'], exponent=validated_data['exponent'], status=validated_data['status'],
            g=truncate(validated_data.get('g')), h=truncate(validated_data.get('h')),
            base=tuple(tuple(truncate(e) for e in t) for t in validated_data.get('base', [])),
            samples=samples, full=validated_data.get('full', False),
            notes=tuple(validated_data.get('notes') or ()),
        )


class WidthBoundReportSerializer(serializers.Serializer):
    case = serializers.CharField()
    k = serializers.IntegerField(allow_null=True)
    bound = serializers.IntegerField()
    oracle = serializers.IntegerField(allow_null=True)
    verified = serializers.BooleanField()


class NewtonResultSerializer(serializers.Serializer):
    point = serializers.ListField(child=serializers.IntegerField())
    trace = serializers.ListField(child=serializers.ListField(child=serializers.IntegerField()))
    valuations = serializers.ListField(child=serializers.IntegerField())
    iterations = serializers.IntegerField(read_only=True)
