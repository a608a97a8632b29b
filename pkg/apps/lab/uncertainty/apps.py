from django.apps import AppConfig


class UncertaintyConfig(AppConfig):
    default_auto_field = 'django.db.models.BigAutoField'
    name = 'apps.lab.uncertainty'
    verbose_name = 'Меры неопределённости'
