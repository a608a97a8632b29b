from django.db import models

from apps.shared.config.models import TimeStampedModel


class ExperimentRun(TimeStampedModel):
    class Status(models.TextChoices):
        RUNNING = 'running', 'Выполняется'
        DONE = 'done', 'Завершён'
        FAILED = 'failed', 'Ошибка'

    spec = models.JSONField(verbose_name='Разрешённая конфигурация')
    version = models.CharField(max_length=100, verbose_name='Версия кода')
    output_dir = models.CharField(max_length=500, verbose_name='Каталог результатов')
    status = models.CharField(max_length=10, choices=Status.choices, default=Status.RUNNING,
                              verbose_name='Статус')
    series_count = models.PositiveIntegerField(default=0, verbose_name='Серий')
    error = models.TextField(blank=True, default='', verbose_name='Ошибка')

    def __str__(self):
        return f'Запуск #{self.pk} ({self.get_status_display()})'

    class Meta:
        verbose_name = 'Запуск эксперимента'
        verbose_name_plural = 'Запуски экспериментов'
        ordering = ['-created_at']


class SeriesSummary(TimeStampedModel):
    run = models.ForeignKey(
        ExperimentRun,
        on_delete=models.CASCADE,
        related_name='series',
        verbose_name='Запуск'
    )
    dataset = models.CharField(max_length=200, verbose_name='Датасет')
    strategy = models.CharField(max_length=50, verbose_name='Стратегия')
    repetitions = models.PositiveIntegerField(verbose_name='Повторов')
    failed = models.PositiveIntegerField(default=0, verbose_name='Упавших повторов')
    mean_auac = models.FloatField(null=True, blank=True, verbose_name='Средний AUAC')
    std_auac = models.FloatField(null=True, blank=True, verbose_name='СКО AUAC')
    mean_full_accuracy = models.FloatField(null=True, blank=True, verbose_name='Точность на всём пуле')

    def __str__(self):
        return f'{self.dataset} / {self.strategy}'

    class Meta:
        verbose_name = 'Серия'
        verbose_name_plural = 'Серии'
        ordering = ['run', 'dataset', 'strategy']
        unique_together = ('run', 'dataset', 'strategy')
