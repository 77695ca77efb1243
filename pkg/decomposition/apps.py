from django.apps import AppConfig


class DecompositionConfig(AppConfig):
    default_auto_field = 'django.db.models.BigAutoField'
    name = 'decomposition'
    verbose_name = 'Bounded generation certificates'
