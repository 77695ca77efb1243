from rest_framework import serializers

from matrix_core.serializers import MatrixField, ModMatrixSerializer
from words.serializers import WordField


class GroupParametersSerializer(serializers.Serializer):
    n = serializers.IntegerField(min_value=2)
    modulus = serializers.IntegerField(min_value=2)
    order = serializers.SerializerMethodField()

    def get_order(self, instance):
        return len(instance)


class WidthEstimateSerializer(serializers.Serializer):
    lower = serializers.IntegerField()
    upper = serializers.IntegerField()
    approximate = serializers.BooleanField()
    exact = serializers.BooleanField(read_only=True)
    closure_size = serializers.IntegerField()
    value_set_size = serializers.IntegerField()


class WidthReportSerializer(serializers.Serializer):
    """What `manage.py width` prints: word, group, set sizes, width and timing."""
    word = WordField()
    group = GroupParametersSerializer()
    estimate = WidthEstimateSerializer()
    elapsed = serializers.FloatField()


class ValueSetReportSerializer(serializers.Serializer):
    word = WordField()
    group = GroupParametersSerializer()
    size = serializers.IntegerField()
    approximate = serializers.BooleanField()
    conjugation_invariant = serializers.BooleanField()
    elements = serializers.ListField(child=serializers.CharField(), required=False)
    elapsed = serializers.FloatField()


class CoverCheckSerializer(serializers.Serializer):
    name = serializers.CharField()
    parameter = serializers.IntegerField()
    bound = serializers.IntegerField()
    exponent = serializers.IntegerField()
    holds = serializers.BooleanField()
    details = serializers.DictField()


class ConjSumResultSerializer(serializers.Serializer):
    strategy = serializers.CharField()
    bound = serializers.IntegerField()
    length = serializers.IntegerField(read_only=True)
    conjugators = serializers.ListField(child=ModMatrixSerializer())


class ConjSumRequestSerializer(serializers.Serializer):
    """Input pair for a conjugate-sum decomposition; both in sl_n(F_p)."""
    a = MatrixField()
    b = MatrixField()
    p = serializers.IntegerField(min_value=2)

    def validate(self, attrs):
        if attrs['a'].n != attrs['b'].n:
            raise serializers.ValidationError({'b': f"Expected a {attrs['a'].n}x{attrs['a'].n} matrix."})
        p = attrs['p']
        for key in ('a', 'b'):
            if sum(attrs[key].rows[i][i] for i in range(attrs[key].n)) % p:
                raise serializers.ValidationError({key: f'Trace must vanish mod {p}.'})
        return attrs
