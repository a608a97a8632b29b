from django.contrib import admin

from apps.lab.active.models import ExperimentRun, SeriesSummary


class SeriesSummaryInline(admin.TabularInline):
    model = SeriesSummary
    extra = 0
    readonly_fields = ('dataset', 'strategy', 'repetitions', 'failed', 'mean_auac', 'std_auac',
                       'mean_full_accuracy')
    can_delete = False


@admin.register(ExperimentRun)
class ExperimentRunAdmin(admin.ModelAdmin):
    list_display = ('id', 'status', 'series_count', 'version', 'output_dir', 'created_at')
    list_filter = ('status', 'created_at')
    search_fields = ('output_dir', 'version')
    readonly_fields = ('spec', 'version', 'created_at', 'updated_at')
    inlines = [SeriesSummaryInline]


@admin.register(SeriesSummary)
class SeriesSummaryAdmin(admin.ModelAdmin):
    list_display = ('dataset', 'strategy', 'mean_auac', 'std_auac', 'failed', 'run')
    list_filter = ('strategy', 'dataset')
    search_fields = ('dataset', 'strategy')
