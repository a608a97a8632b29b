from django.apps import AppConfig


class DatasetsConfig(AppConfig):
    default_auto_field = 'django.db.models.BigAutoField'
    name = 'apps.lab.datasets'
    verbose_name = 'Датасеты и карты неопределённости'
