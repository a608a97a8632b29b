from django.apps import AppConfig


class BeliefConfig(AppConfig):
    default_auto_field = 'django.db.models.BigAutoField'
    name = 'apps.lab.belief'
    verbose_name = 'Функции доверия'
