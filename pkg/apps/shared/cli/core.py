"""
Единая точка входа `python -m apps.shared.cli <подкоманда> [флаги]`.

Подкоманды — это management-команды Django; флаги передаются им без изменений.
Коды выхода: 0 — успех, 2 — ошибка входных данных или использования, 1 — сбой выполнения.
"""
import logging
import os
import sys

from django.core.management import get_commands, load_command_class

logger = logging.getLogger(__name__)

PROG = 'evidal'

SUBCOMMANDS = {
    'fetch': ('fetch', 'скачать и проверить датасеты по манифесту'),
    'landscape': ('landscape', 'растр меры неопределённости на сетке 2D'),
    'al-run': ('al_run', 'эксперимент активного обучения по JSON-конфигурации'),
    'report': ('report', 'отчёт сравнения стратегий (Markdown/HTML/CSV)'),
    'cd': ('cd', 'данные диаграммы критической разности'),
    'selfcheck': ('selfcheck', 'встроенные проверки инвариантов'),
}


def usage():
    lines = [f'usage: {PROG} <подкоманда> [флаги]', '', 'подкоманды:']
    lines += [f'  {name:<10} {description}' for name, (_, description) in SUBCOMMANDS.items()]
    lines += ['', f'Справка по подкоманде: {PROG} <подкоманда> --help']
    return '\n'.join(lines) + '\n'


def run_subcommand(argv):
    """Запускает подкоманду и возвращает код выхода. Django уже должен быть настроен."""
    argv = list(argv)
    if not argv or argv[0] in ('-h', '--help'):
        (sys.stdout if argv else sys.stderr).write(usage())
        return 0 if argv else 2
    name = argv[0]
    if name not in SUBCOMMANDS:
        sys.stderr.write(f'{PROG}: неизвестная подкоманда {name!r}\n\n{usage()}')
        return 2

    command_name = SUBCOMMANDS[name][0]
    command = load_command_class(get_commands()[command_name], command_name)
    try:
        command.run_from_argv([PROG, command_name, *argv[1:]])
    except SystemExit as exc:
        if exc.code is None:
            return 0
        return exc.code if isinstance(exc.code, int) else 1
    except Exception:
        logger.exception('%s %s: необработанная ошибка', PROG, name)
        return 1
    return 0


def main(argv=None):
    os.environ.setdefault('DJANGO_SETTINGS_MODULE', 'main.settings')
    import django

    django.setup()
    return run_subcommand(sys.argv[1:] if argv is None else argv)
