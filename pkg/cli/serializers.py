from django.conf import settings
from rest_framework import serializers

FORMATS = ['text', 'structured']


class RunConfigSerializer(serializers.Serializer):
    """
    Flags shared by every command. Budgets and the seed fall back to the
    LAB_* settings, so every report can record the values actually used.
    """
    word = serializers.CharField(required=False, allow_blank=True)
    n = serializers.IntegerField(required=False, min_value=2)
    q = serializers.IntegerField(required=False, min_value=1, default=1)
    p = serializers.IntegerField(required=False, min_value=2)
    K = serializers.IntegerField(required=False, min_value=1, default=1)
    seed = serializers.IntegerField(required=False)
    budget_elements = serializers.IntegerField(required=False, min_value=1)
    budget_samples = serializers.IntegerField(required=False, min_value=1)
    max_len = serializers.IntegerField(required=False, min_value=1)
    out = serializers.CharField(required=False, allow_blank=True, default='')
    format = serializers.ChoiceField(choices=FORMATS, required=False, default='text')

    def validate(self, attrs):
        attrs.setdefault('seed', settings.LAB_DEFAULT_SEED)
        attrs.setdefault('budget_elements', settings.LAB_BUDGET_ELEMENTS)
        attrs.setdefault('budget_samples', settings.LAB_BUDGET_SAMPLES)
        attrs.setdefault('max_len', settings.LAB_MAX_LEN)
        return attrs

    @classmethod
    def from_options(cls, options, required=()):
        data = {key: value for key, value in options.items() if value is not None and key in cls._declared_fields}
        serializer = cls(data=data)
        serializer.is_valid(raise_exception=True)
        config = serializer.validated_data
        missing = [name for name in required if config.get(name) in (None, '')]
        if missing:
            raise serializers.ValidationError({name: 'This flag is required.' for name in missing})
        return config


class CertificateEnvelopeSerializer(serializers.Serializer):
    """Outer layer of every certificate file; `body` is owned by the kind's serializer."""
    kind = serializers.ChoiceField(choices=['factor', 'lift'])
    seed = serializers.IntegerField(required=False, allow_null=True, default=None)
    sha256 = serializers.RegexField(r'^[0-9a-f]{64}$')
    digests = serializers.ListField(child=serializers.RegexField(r'^[0-9a-f]{64}$'))
    body = serializers.DictField()
