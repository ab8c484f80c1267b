import os

import django

os.environ.setdefault('DJANGO_SETTINGS_MODULE', 'frontierlag.settings')
django.setup()
