import os

import django

os.environ.setdefault('DJANGO_SETTINGS_MODULE', 'wordwidth.settings')
django.setup()
