from rest_framework import serializers

from wordwidth.exceptions import LabError
from .models import ModMatrix, SquareIntMatrix


class MatrixField(serializers.Field):
    """Integer matrix in the "1,2;0,1" text format."""
    default_error_messages = {
        'invalid': 'Expected matrix text such as "1,2;0,1".',
    }

    def to_representation(self, value):
        return value.format()

    def to_internal_value(self, data):
        if isinstance(data, SquareIntMatrix):
            return data
        if not isinstance(data, str):
            self.fail('invalid')
        try:
            return SquareIntMatrix.parse(data)
        except LabError as e:
            raise serializers.ValidationError(e.message)


class ModMatrixSerializer(serializers.Serializer):
    matrix = serializers.CharField()
    modulus = serializers.IntegerField(min_value=2)

    def to_representation(self, instance):
        return {'matrix': instance.format(), 'modulus': instance.modulus}

    def validate(self, attrs):
        try:
            rows = SquareIntMatrix.parse(attrs['matrix']).rows
        except LabError as e:
            raise serializers.ValidationError({'matrix': e.message})
        attrs['value'] = ModMatrix(rows, attrs['modulus'])
        return attrs
