from rest_framework import serializers

from matrix_core.serializers import MatrixField
from words.serializers import WordField
from .models import FACTOR_CLASSES, ClassifiedFactor, FactorCertificate


class ClassifiedFactorSerializer(serializers.Serializer):
    kind = serializers.ChoiceField(choices=FACTOR_CLASSES)
    matrix = MatrixField()
    h = MatrixField(required=False, allow_null=True, default=None)
    k = MatrixField(required=False, allow_null=True, default=None)
    block_size = serializers.IntegerField(required=False, allow_null=True, min_value=1, default=None)

    def to_representation(self, instance):
        data = super().to_representation(instance)
        # Optional fields stay out of the file when unset
        return {key: value for key, value in data.items() if value is not None}

    def validate(self, attrs):
        if attrs['kind'] == 'Uc' and (attrs.get('h') is None or attrs.get('k') is None):
            raise serializers.ValidationError({'h': 'Uc factors need the witness pair h, k.'})
        if attrs['kind'] == 'Eblock' and attrs.get('block_size') is None:
            raise serializers.ValidationError({'block_size': 'Eblock factors need block_size.'})
        return attrs

    def create(self, validated_data):
        return ClassifiedFactor(**validated_data)


class FactorCertificateSerializer(serializers.Serializer):
    input = MatrixField()
    q = serializers.IntegerField(min_value=1)
    factors = ClassifiedFactorSerializer(many=True)
    notes = serializers.ListField(child=serializers.CharField(), required=False, default=list)
    classes = serializers.SerializerMethodField()

    def get_classes(self, instance):
        return instance.class_sequence

    def create(self, validated_data):
        factors = tuple(ClassifiedFactor(**f) for f in validated_data['factors'])
        return FactorCertificate(
            input=validated_data['input'],
            q=validated_data['q'],
            factors=factors,
            notes=tuple(validated_data.get('notes') or ()),
        )


class QWitnessSerializer(serializers.Serializer):
    word = WordField()
    g = MatrixField()
    h = MatrixField()
    commutator = MatrixField()
    q = serializers.IntegerField()
    d = serializers.IntegerField()
    conjugator = MatrixField()


class UnipotentCaptureSerializer(serializers.Serializer):
    h = MatrixField()
    f = MatrixField()
    f_cover = serializers.ListField(child=MatrixField())
    fh = MatrixField()
    standard = MatrixField()
    conjugator = MatrixField()
