import logging

from celery import shared_task

from apps.lab.datasets.services import DatasetService

from .core import ActiveLearningService, ALConfig

logger = logging.getLogger(__name__)


@shared_task(name='active.run_repetition')
def run_repetition_task(dataset_name, config, repetition):
    """Один повтор серии на воркере. Датасет восстанавливается по имени из реестра."""
    dataset = DatasetService.load_dataset(dataset_name)
    result = ActiveLearningService.run_repetition(dataset, ALConfig.from_dict(config), repetition)
    logger.info('%s, повтор %d: AUAC %s', dataset_name, repetition, result.auac)
    return result.to_dict()
