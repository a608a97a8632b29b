from django.apps import AppConfig


class ActiveConfig(AppConfig):
    default_auto_field = 'django.db.models.BigAutoField'
    name = 'apps.lab.active'
    verbose_name = 'Активное обучение'
