import django.db.models.deletion
from django.db import migrations, models


class Migration(migrations.Migration):

    initial = True

    dependencies = [
    ]

    operations = [
        migrations.CreateModel(
            name='ExperimentRun',
            fields=[
                ('id', models.BigAutoField(auto_created=True, primary_key=True, serialize=False, verbose_name='ID')),
                ('created_at', models.DateTimeField(auto_now_add=True, verbose_name='Дата создания')),
                ('updated_at', models.DateTimeField(auto_now=True, verbose_name='Дата обновления')),
                ('spec', models.JSONField(verbose_name='Разрешённая конфигурация')),
                ('version', models.CharField(max_length=100, verbose_name='Версия кода')),
                ('output_dir', models.CharField(max_length=500, verbose_name='Каталог результатов')),
                ('status', models.CharField(choices=[('running', 'Выполняется'), ('done', 'Завершён'), ('failed', 'Ошибка')], default='running', max_length=10, verbose_name='Статус')),
                ('series_count', models.PositiveIntegerField(default=0, verbose_name='Серий')),
                ('error', models.TextField(blank=True, default='', verbose_name='Ошибка')),
            ],
            options={
                'verbose_name': 'Запуск эксперимента',
                'verbose_name_plural': 'Запуски экспериментов',
                'ordering': ['-created_at'],
            },
        ),
        migrations.CreateModel(
            name='SeriesSummary',
            fields=[
                ('id', models.BigAutoField(auto_created=True, primary_key=True, serialize=False, verbose_name='ID')),
                ('created_at', models.DateTimeField(auto_now_add=True, verbose_name='Дата создания')),
                ('updated_at', models.DateTimeField(auto_now=True, verbose_name='Дата обновления')),
                ('dataset', models.CharField(max_length=200, verbose_name='Датасет')),
                ('strategy', models.CharField(max_length=50, verbose_name='Стратегия')),
                ('repetitions', models.PositiveIntegerField(verbose_name='Повторов')),
                ('failed', models.PositiveIntegerField(default=0, verbose_name='Упавших повторов')),
                ('mean_auac', models.FloatField(blank=True, null=True, verbose_name='Средний AUAC')),
                ('std_auac', models.FloatField(blank=True, null=True, verbose_name='СКО AUAC')),
                ('mean_full_accuracy', models.FloatField(blank=True, null=True, verbose_name='Точность на всём пуле')),
                ('run', models.ForeignKey(on_delete=django.db.models.deletion.CASCADE, related_name='series', to='active.experimentrun', verbose_name='Запуск')),
            ],
            options={
                'verbose_name': 'Серия',
                'verbose_name_plural': 'Серии',
                'ordering': ['run', 'dataset', 'strategy'],
                'unique_together': {('run', 'dataset', 'strategy')},
            },
        ),
    ]
