"""
Django settings for the wordwidth project.

The project has no database and no HTTP surface: Django provides settings,
app discovery and management commands, DRF provides the certificate
serializers, and celery fans out independent lifting samples.
"""

from pathlib import Path
from decouple import config

BASE_DIR = Path(__file__).resolve().parent.parent

SECRET_KEY = config('SECRET_KEY', default='wordwidth-local-only')

DEBUG = config('DEBUG', default=False, cast=bool)

ALLOWED_HOSTS = []


INSTALLED_APPS = [
    'rest_framework',

    # Local Apps
    'matrix_core',
    'words',
    'decomposition',
    'finite_lab',
    'padic',
    'cli',
]

# Pure computation; nothing is persisted.
DATABASES = {}

LANGUAGE_CODE = 'en-us'

TIME_ZONE = 'UTC'

USE_I18N = False

USE_TZ = True

DEFAULT_AUTO_FIELD = 'django.db.models.BigAutoField'


# Experiment budgets and defaults
LAB_BUDGET_ELEMENTS = config('LAB_BUDGET_ELEMENTS', default=10_000_000, cast=int)
LAB_BUDGET_TUPLES = config('LAB_BUDGET_TUPLES', default=1_000_000, cast=int)
LAB_BUDGET_SAMPLES = config('LAB_BUDGET_SAMPLES', default=200, cast=int)
LAB_MAX_LEN = config('LAB_MAX_LEN', default=16, cast=int)
LAB_DEFAULT_SEED = config('LAB_DEFAULT_SEED', default=1, cast=int)
LAB_STABLE_RANGE_BOX = config('LAB_STABLE_RANGE_BOX', default=16, cast=int)
LAB_MAX_EXPONENT = config('LAB_MAX_EXPONENT', default=100_000, cast=int)


REST_FRAMEWORK = {
    'DEFAULT_RENDERER_CLASSES': [
        'rest_framework.renderers.JSONRenderer',
    ],
    'UNAUTHENTICATED_USER': None,
}


LOG_LEVEL = config('LOG_LEVEL', default='INFO')

LOGGING = {
    'version': 1,
    'disable_existing_loggers': False,
    'formatters': {
        'simple': {
            'format': '{asctime} {levelname} {name}: {message}',
            'style': '{',
        },
    },
    'handlers': {
        'console': {
            'class': 'logging.StreamHandler',
            'formatter': 'simple',
        },
    },
    'root': {
        'handlers': ['console'],
        'level': LOG_LEVEL,
    },
}


# Celery Configuration
REDIS_URL = config('REDIS_URL', default='')
CELERY_BROKER_URL = config('CELERY_BROKER_URL', default=REDIS_URL or 'memory://')
CELERY_RESULT_BACKEND = config('CELERY_RESULT_BACKEND', default=REDIS_URL or 'cache+memory://')
CELERY_TASK_ALWAYS_EAGER = config('CELERY_TASK_ALWAYS_EAGER', default=True, cast=bool)
CELERY_TASK_EAGER_PROPAGATES = True
CELERY_ACCEPT_CONTENT = ['json']
CELERY_TASK_SERIALIZER = 'json'
CELERY_RESULT_SERIALIZER = 'json'
CELERY_TIMEZONE = TIME_ZONE
