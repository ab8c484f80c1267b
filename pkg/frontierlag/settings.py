"""
Django settings for frontierlag project.

The audit engine lives in the ``audit`` app; every tunable it reads is kept in
the ``FRONTIERLAG`` dict at the bottom of this file.

For the full list of Django settings and their values, see
https://docs.djangoproject.com/en/4.2/ref/settings/
"""

import os

# Build paths inside the project like this: os.path.join(BASE_DIR, ...)
BASE_DIR = os.path.dirname(os.path.dirname(os.path.abspath(__file__)))
AUDIT_DATA_DIR = os.path.join(BASE_DIR, 'audit', 'data')

# no web surface is served, the key only satisfies Django's startup checks
SECRET_KEY = os.environ.get('FRONTIERLAG_SECRET_KEY', 'frontierlag-cli-only')

DEBUG = False

ALLOWED_HOSTS = []


# Application definition

INSTALLED_APPS = [
    'audit',

    'rest_framework',

    'django.contrib.auth',
    'django.contrib.contenttypes',
]

MIDDLEWARE = []

# Database
# the audit engine keeps no ORM state; frozen inputs are files
DATABASES = {
    'default': {
        'ENGINE': 'django.db.backends.sqlite3',
        'NAME': os.path.join(BASE_DIR, 'db.sqlite3'),
    }
}

DEFAULT_AUTO_FIELD = 'django.db.models.BigAutoField'


# Internationalization

LANGUAGE_CODE = 'en-us'

TIME_ZONE = 'UTC'

USE_I18N = False

USE_TZ = True


REST_FRAMEWORK = {
    'DEFAULT_RENDERER_CLASSES': [
        'rest_framework.renderers.JSONRenderer',
    ],
    'COERCE_DECIMAL_TO_STRING': False,
    'DATE_FORMAT': 'iso-8601',
}


LOGGING = {
    'version': 1,
    'disable_existing_loggers': False,
    'formatters': {
        'plain': {
            'format': '%(asctime)s %(levelname)s %(name)s: %(message)s',
        },
    },
    'handlers': {
        'console': {
            'class': 'logging.StreamHandler',
            'formatter': 'plain',
        },
    },
    'loggers': {
        'audit': {
            'handlers': ['console'],
            'level': os.environ.get('FRONTIERLAG_LOG_LEVEL', 'INFO'),
            'propagate': False,
        },
    },
}


FRONTIERLAG = {
    # frozen inputs
    'CAPABILITY_TABLE': os.path.join(AUDIT_DATA_DIR, 'capability_table.csv'),
    'ALIAS_MAP': os.path.join(AUDIT_DATA_DIR, 'aliases.csv'),
    'ADMISSIBILITY_RULES': os.path.join(AUDIT_DATA_DIR, 'admissibility.csv'),
    'SCAFFOLD_BASELINES': os.path.join(AUDIT_DATA_DIR, 'scaffold_baselines.csv'),
    'LAG_MEDIANS': os.path.join(AUDIT_DATA_DIR, 'lag_medians.json'),
    'FRAMING_CONFUSION': os.path.join(AUDIT_DATA_DIR, 'framing_confusion.json'),
    'VALENCE_CONFUSION': os.path.join(AUDIT_DATA_DIR, 'valence_confusion.json'),
    'CORPUS': os.environ.get('FRONTIERLAG_CORPUS'),
    'WATERFALL_CHIPS': os.path.join(AUDIT_DATA_DIR, 'swebench_waterfall.csv'),

    # gap engine
    'DEFAULT_SCALE': 'eci',
    'DEFAULT_LAG_DAYS': 180,
    'LAG_SWEEP': [0, 90, 180, 270, 365, 'domain'],
    'TIER_WINDOW_DAYS': 90,
    'TIER_WINDOW_MODE': 'symmetric',
    'DEPLOYMENT_PRICE_FACTOR': 10,
    'LOOKUP_POLICY': 'sibling_impute',

    # failure classifier
    'CAPABILITY_THRESHOLD': 12.0,
    'THRESHOLD_SWEEP': [8, 10, 12, 15, 20],
    'PERCENTILE_SWEEP': [50, 75, 90, 95],
    'ELICITATION_MODE': 'or3',
    'INTERPRETIVE_MODE': 'and2',
    'MISSING_CONFIG': 'null_as_missing',
    'EXTRACTION_CONFIDENCE_FLOOR': 0.90,

    # checklist: Elicitation Completeness weights over items 7 to 11
    'COMPLETENESS_WEIGHTS': {7: 0.3, 8: 0.15, 9: 0.2, 10: 0.2, 11: 0.15},

    # inference
    'ALPHA': 0.05,
    'BOOTSTRAP_DRAWS': 1500,
    'PERMUTATION_DRAWS': 1000,
    'MEASUREMENT_ERROR_DRAWS': 1000,
    'MEASUREMENT_ERROR_GATE': 0.90,
    'SPEC_CURVE_CAP': 4096,
    'SEED': 20260401,
    'WORKERS': 1,

    # live metadata
    'METADATA_SOURCES': ['crossref', 'openalex'],
    'METADATA_CACHE_DIR': os.environ.get(
        'FRONTIERLAG_CACHE_DIR', os.path.join(BASE_DIR, '.frontierlag-cache')
    ),
    'POLITENESS_DELAY': 1.0,
    'HTTP_TIMEOUT': 20,
    'CONTACT_EMAIL': os.environ.get('FRONTIERLAG_CONTACT_EMAIL', ''),
}
