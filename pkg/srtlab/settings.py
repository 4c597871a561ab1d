import os
from pathlib import Path

BASE_DIR = Path(__file__).resolve().parent.parent

SECRET_KEY = os.environ.get(
    'SRTLAB_SECRET_KEY',
    'django-insecure-srtlab-local-only-key',
)

DEBUG = True

ALLOWED_HOSTS = []

INSTALLED_APPS = [
    'renewal.apps.RenewalConfig',
]

DATABASES = {
    'default': {
        'ENGINE': 'django.db.backends.sqlite3',
        'NAME': BASE_DIR / 'db.sqlite3',
    }
}

LANGUAGE_CODE = 'ru'

TIME_ZONE = 'Europe/Moscow'

USE_I18N = True

USE_TZ = True

DEFAULT_AUTO_FIELD = 'django.db.models.BigAutoField'

LOGGING = {
    'version': 1,
    'disable_existing_loggers': False,
    'formatters': {
        'verbose': {
            'format': '{asctime} {levelname} {name}: {message}',
            'style': '{',
        },
    },
    'handlers': {
        'console': {
            'class': 'logging.StreamHandler',
            'formatter': 'verbose',
        },
    },
    'loggers': {
        'renewal': {
            'handlers': ['console'],
            'level': os.environ.get('SRTLAB_LOG_LEVEL', 'INFO'),
            'propagate': False,
        },
    },
}

# Значения по умолчанию для численной лаборатории.
# Файл конфигурации прогона может переопределить любой ключ из tolerances.
RENEWAL_LAB = {
    'OUTPUT_DIR': BASE_DIR / 'runs',
    'THREADS': 1,
    'TOLERANCES': {
        'conservation': 1e-9,
        'clip_step': 1e-9,
        'clip_abort': 1e-6,
        'renewal_residual': 1e-9,
        'fft_crossover': 64,
        'chain_node_budget': 10**8,
        'srt_truncation_flag': 0.1,
        'srt_truncation_tol': 1e-3,
        'srt_n_cap': 4096,
        'two_sided_window_factor': 4,
        'an_threshold': 0.1,
        'an_ceiling': 1.0,
        'tail_band': 0.1,
        'suff_growth_band': 0.25,
        'series_cancellation': 1e7,
        'mc_samples': 200_000,
        'mc_sigma': 4.0,
    },
    'DELTA_GRID': (0.4, 0.2, 0.1, 0.05, 0.025),
    'ETA': 0.5,
}
