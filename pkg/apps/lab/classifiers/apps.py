from django.apps import AppConfig


class ClassifiersConfig(AppConfig):
    default_auto_field = 'django.db.models.BigAutoField'
    name = 'apps.lab.classifiers'
    verbose_name = 'Классификаторы K-NN'
