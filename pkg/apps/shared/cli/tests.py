"""
Тесты единой точки входа и selfcheck.

Запуск:
    python manage.py test apps.shared.cli
"""
import tempfile
from contextlib import redirect_stderr, redirect_stdout
from io import StringIO
from pathlib import Path
from unittest.mock import patch

from django.core.management import call_command
from django.core.management.base import CommandError
from django.test import SimpleTestCase

from .checks import CHECKS, run_checks
from .core import run_subcommand


def run_quietly(argv):
    out, err = StringIO(), StringIO()
    with redirect_stdout(out), redirect_stderr(err):
        code = run_subcommand(argv)
    return code, out.getvalue(), err.getvalue()


# ────────────────────────────────────────────────────────────────────────────
# selfcheck
# ────────────────────────────────────────────────────────────────────────────

class SelfcheckTest(SimpleTestCase):

    def test_all_checks_pass(self):
        results = run_checks()
        self.assertEqual(len(results), len(CHECKS))
        self.assertEqual([name for name, error in results if error is not None], [])

    def test_failure_is_reported(self):
        def broken():
            raise AssertionError('1 != 2')

        self.assertEqual(run_checks([('сломано', broken)]), [('сломано', '1 != 2')])

    def test_command_success(self):
        out = StringIO()
        call_command('selfcheck', stdout=out)
        self.assertIn('✓ Все проверки пройдены', out.getvalue())

    def test_command_failure_exits_1(self):
        with patch('apps.shared.cli.management.commands.selfcheck.run_checks', return_value=[('x', 'boom')]):
            with self.assertRaises(CommandError) as ctx:
                call_command('selfcheck', stdout=StringIO())
        self.assertEqual(ctx.exception.returncode, 1)


# ────────────────────────────────────────────────────────────────────────────
# run_subcommand
# ────────────────────────────────────────────────────────────────────────────

class RunSubcommandTest(SimpleTestCase):

    def test_selfcheck(self):
        code, out, _ = run_quietly(['selfcheck'])
        self.assertEqual(code, 0)
        self.assertIn('✓', out)

    def test_unknown_flag_prints_usage(self):
        code, _, err = run_quietly(['selfcheck', '--bogus'])
        self.assertEqual(code, 2)
        self.assertIn('usage:', err)

    def test_unknown_subcommand(self):
        code, _, err = run_quietly(['frobnicate'])
        self.assertEqual(code, 2)
        self.assertIn('al-run', err)

    def test_help_and_empty(self):
        self.assertEqual(run_quietly(['--help'])[0], 0)
        self.assertEqual(run_quietly([])[0], 2)

    def test_validation_error_exits_2(self):
        with tempfile.TemporaryDirectory() as tmp:
            code, _, err = run_quietly(['report', '--results', tmp])
        self.assertEqual(code, 2)
        self.assertIn('series', err)

    def test_runtime_failure_exits_1(self):
        with patch('apps.shared.cli.management.commands.selfcheck.run_checks', side_effect=RuntimeError('disk')):
            code, _, _ = run_quietly(['selfcheck'])
        self.assertEqual(code, 1)

    def test_landscape(self):
        with tempfile.TemporaryDirectory() as tmp:
            code, _, err = run_quietly([
                'landscape', '--kind', 'three_class_imprecise', '--measure', 'klir', '--lambda', '0.2',
                '--resolution', '20', '--output', tmp,
            ])
            self.assertEqual(code, 0, err)
            self.assertTrue((Path(tmp) / 'raster.csv').exists())
            self.assertTrue((Path(tmp) / 'raster.pgm').exists())
