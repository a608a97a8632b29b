from django.apps import AppConfig


class StatsConfig(AppConfig):
    default_auto_field = 'django.db.models.BigAutoField'
    name = 'apps.lab.stats'
    verbose_name = 'Статистическое сравнение стратегий'
