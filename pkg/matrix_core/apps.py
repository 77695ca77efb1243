from django.apps import AppConfig


class MatrixCoreConfig(AppConfig):
    default_auto_field = 'django.db.models.BigAutoField'
    name = 'matrix_core'
    verbose_name = 'Exact matrix arithmetic'
