from rest_framework import serializers

from wordwidth.exceptions import WordSyntaxError
from .models import Word
from .services import WordService


class WordField(serializers.Field):
    """Word text in, canonical expanded text out."""

    def to_representation(self, value):
        return value.format()

    def to_internal_value(self, data):
        if isinstance(data, Word):
            return data
        if not isinstance(data, str):
            raise serializers.ValidationError("Expected word text such as '[x1,x2]'.")
        try:
            return WordService.parse_word(data)
        except WordSyntaxError as e:
            raise serializers.ValidationError(e.message)
