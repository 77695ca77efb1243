import os
from celery import Celery

# Set the default Django settings module for the 'celery' program.
os.environ.setdefault('DJANGO_SETTINGS_MODULE', 'wordwidth.settings')

app = Celery('wordwidth')

app.config_from_object('django.conf:settings', namespace='CELERY')

# Picks up padic.tasks and any other app-level task modules.
app.autodiscover_tasks()
