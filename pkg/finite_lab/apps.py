from django.apps import AppConfig


class FiniteLabConfig(AppConfig):
    default_auto_field = 'django.db.models.BigAutoField'
    name = 'finite_lab'
    verbose_name = 'Finite group laboratory'
