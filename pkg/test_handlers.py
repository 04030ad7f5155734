import io
import logging
import json
import os
import tempfile
import unittest
from contextlib import redirect_stderr, redirect_stdout
from unittest import mock

import config
from cli import build_parser, main
from dice import load_dataset
from handlers import COMMANDS, parse_floats
from measures import SignedMeasure, load_measure, save_measure
from operators import OperatorMatrix, save_matrix
from permgroup import identity, parse_cycles


def run(*argv):
    """Lance la CLI, renvoie (code, stdout, stderr)"""
    out, err = io.StringIO(), io.StringIO()
    with redirect_stdout(out), redirect_stderr(err):
        code = main(list(argv))
    return code, out.getvalue(), err.getvalue()


class TestParser(unittest.TestCase):
    def test_all_commands_registered(self):
        parser = build_parser()
        for command in COMMANDS:
            args = parser.parse_args([command, '--group', 'S3'] if command in ('check', 'decompose', 'dim-pm', 'versatility') else [command])
            self.assertEqual(args.command, command)
            self.assertTrue(callable(args.handler))

    def test_usage_errors_are_json(self):
        for argv in (['check'], ['dice-run', '--weights', '1,2'], ['nope']):
            err = io.StringIO()
            with redirect_stderr(err), self.assertRaises(SystemExit) as ctx:
                main(argv)
            self.assertEqual(ctx.exception.code, 2)
            self.assertEqual(json.loads(err.getvalue())["error"], "UsageError")

    def test_parse_floats(self):
        self.assertEqual(parse_floats('0.2, 0.3,0.5', 3), [0.2, 0.3, 0.5])
        for text in ('1,2', '1,2,x', '1,2,inf'):
            with self.assertRaises(ValueError):
                parse_floats(text, 3)


class TestAlgebraCommands(unittest.TestCase):
    def setUp(self):
        self.tmp = tempfile.TemporaryDirectory()
        self.addCleanup(self.tmp.cleanup)

    def path(self, name):
        return os.path.join(self.tmp.name, name)

    def write_matrix(self, name, rows):
        save_matrix(OperatorMatrix(rows), self.path(name))
        return self.path(name)

    def test_check_simplest_case(self):
        matrix = self.write_matrix('simplest.csv', [[1.0, -1.0], [-1.0, 1.0]])
        code, out, _ = run('check', '--matrix', matrix, '--group', 'S2')
        self.assertEqual(code, 0)
        result = json.loads(out)
        self.assertTrue(result["equivariant"])
        self.assertTrue(result["transitive"])
        self.assertFalse(result["nonexpansive"])
        self.assertEqual(result["inf_norm"], 2.0)
        self.assertNotIn("witness", result)

    def test_check_identity(self):
        matrix = self.write_matrix('id.csv', [[1.0, 0.0, 0.0], [0.0, 1.0, 0.0], [0.0, 0.0, 1.0]])
        code, out, _ = run('check', '--matrix', matrix, '--group', 'S3')
        self.assertEqual(code, 0)
        result = json.loads(out)
        self.assertTrue(result["equivariant"] and result["nonexpansive"] and result["transitive"])
        self.assertEqual(result["inf_norm"], 1.0)

    def test_check_reports_witness(self):
        matrix = self.write_matrix('ex1.csv', [[1.0, 1.0], [0.0, 0.0]])
        code, out, _ = run('check', '--matrix', matrix, '--group', 'S2')
        self.assertEqual(code, 1)
        result = json.loads(out)
        self.assertFalse(result["equivariant"])
        self.assertEqual(result["witness"], '(1 2)')
        self.assertEqual(len(result["entry"]), 2)

    def test_check_from_measure(self):
        measure = SignedMeasure.from_pairs(2, [(identity(2), 0.5), (parse_cycles('(1 2)', 2), -0.5)])
        save_measure(measure, self.path('mu.json'))
        code, out, _ = run('check', '--measure', self.path('mu.json'), '--group', 'S2')
        self.assertEqual(code, 0)
        result = json.loads(out)
        self.assertEqual(result["inf_norm"], 1.0)
        self.assertTrue(result["nonexpansive"])

    def test_input_errors(self):
        matrix = self.write_matrix('id.csv', [[1.0, 0.0], [0.0, 1.0]])
        with open(self.path('bad.csv'), 'w') as f:
            f.write('1,2\n3\n')
        cases = [
            ('check', '--group', 'S2'),
            ('check', '--matrix', self.path('missing.csv'), '--group', 'S2'),
            ('check', '--matrix', self.path('bad.csv'), '--group', 'S2'),
            ('check', '--matrix', matrix, '--group', 'S3'),
            ('check', '--matrix', matrix, '--measure', matrix, '--group', 'S2'),
            ('check', '--matrix', matrix, '--group', 'Q7'),
            ('check', '--matrix', matrix, '--group', 'S2', '--tol', '-1'),
            ('dim-pm', '--group', self.path('missing.json')),
        ]
        for argv in cases:
            code, out, err = run(*argv)
            self.assertEqual(code, 2, argv)
            self.assertEqual(out, '')
            self.assertEqual(len(err.strip().splitlines()), 1, err)
            payload = json.loads(err)
            self.assertEqual(set(payload), {"error", "message"})

    def test_decompose(self):
        matrix = self.write_matrix('half.csv', [[0.5, -0.5], [-0.5, 0.5]])
        code, out, _ = run('decompose', '--matrix', matrix, '--group', 'S2', '--out', self.path('mu.json'))
        self.assertEqual(code, 0)
        result = json.loads(out)
        self.assertTrue(result["is_geneo"])
        self.assertAlmostEqual(result["total_variation"], 1.0)
        self.assertNotIn("measure", result)
        measure = load_measure(self.path('mu.json'))
        self.assertAlmostEqual(measure[parse_cycles('(1 2)', 2)], -0.5)

        code, out, _ = run('decompose', '--matrix', matrix, '--group', 'S2')
        self.assertEqual(code, 0)
        self.assertEqual(len(json.loads(out)["measure"]), 2)

    def test_decompose_failures(self):
        matrix = self.write_matrix('ex1.csv', [[1.0, 1.0], [0.0, 0.0]])
        code, _, err = run('decompose', '--matrix', matrix, '--group', 'S2')
        self.assertEqual(code, 1)
        self.assertEqual(json.loads(err)["error"], "NotEquivariant")
        code, _, err = run('decompose', '--matrix', matrix, '--group', 'I2')
        self.assertEqual(code, 1)
        self.assertEqual(json.loads(err)["error"], "NotTransitive")

    def test_dim_pm(self):
        for name, expected in (('S4', '5'), ('I3', '6'), ('C4', '10')):
            code, out, _ = run('dim-pm', '--group', name)
            self.assertEqual(code, 0)
            self.assertEqual(out.strip(), expected)

    def test_dim_pm_from_group_file(self):
        with open(self.path('group.json'), 'w') as f:
            json.dump({"degree": 4, "generators": ["(1 2 3 4)"]}, f)
        code, out, _ = run('dim-pm', '--group', self.path('group.json'))
        self.assertEqual((code, out.strip()), (0, '10'))

    def test_versatility(self):
        code, out, _ = run('versatility', '--group', 'S4')
        self.assertEqual(code, 0)
        result = json.loads(out)
        self.assertEqual(result["weakly_versatile"], {"1": True, "2": True, "3": False})
        self.assertEqual(result["min_nontrivial_permutant_size"], 3)
        self.assertEqual((result["degree"], result["order"]), (4, 24))


class TestErrorLogging(unittest.TestCase):
    def setUp(self):
        self.tmp = tempfile.TemporaryDirectory()
        self.addCleanup(self.tmp.cleanup)
        # relâche le FileHandler avant la suppression du répertoire
        self.addCleanup(config.setup_logging, None, io.StringIO())

    def test_error_detail_goes_to_log_file_only(self):
        log_path = os.path.join(self.tmp.name, 'geneo.log')
        missing = os.path.join(self.tmp.name, 'missing.csv')
        with mock.patch.object(config, 'LOG_FILE', log_path):
            code, out, err = run('check', '--matrix', missing, '--group', 'S2')
            logging.getLogger().handlers[-1].flush()
        self.assertEqual(code, 2)
        self.assertEqual(out, '')
        self.assertEqual(len(err.splitlines()), 1)
        self.assertEqual(json.loads(err)["error"], "FileNotFoundError")
        with open(log_path) as f:
            logged = f.read()
        self.assertIn("ERROR", logged)
        self.assertIn("Erreur dans check_command", logged)

    def test_verbose_level_keeps_error_line_alone(self):
        matrix = os.path.join(self.tmp.name, 'ex1.csv')
        save_matrix(OperatorMatrix([[1.0, 1.0], [0.0, 0.0]]), matrix)
        code, _, err = run('--log-level', 'DEBUG', 'decompose', '--matrix', matrix, '--group', 'S2')
        self.assertEqual(code, 1)
        lines = err.strip().splitlines()
        self.assertEqual(json.loads(lines[-1])["error"], "NotEquivariant")
        self.assertFalse(any("Erreur dans" in line for line in lines))


class TestDiceCommands(unittest.TestCase):
    def setUp(self):
        self.tmp = tempfile.TemporaryDirectory()
        self.addCleanup(self.tmp.cleanup)

    def test_generate(self):
        path = os.path.join(self.tmp.name, 'dice.bin')
        code, out, _ = run('dice-generate', '--n', '21', '--count', '4', '--threads', '1', '--out', path)
        self.assertEqual(code, 0)
        result = json.loads(out)
        self.assertEqual(result["per_class"], {"1": 2, "2": 2})
        n, samples = load_dataset(path)
        self.assertEqual((n, len(samples)), (21, 4))

    def test_argument_checks(self):
        for argv in (
            ('dice-generate', '--n', '21', '--count', '4'),
            ('dice-run', '--n', '20'),
            ('dice-run', '--count', '5'),
            ('dice-run', '--pcs', '5'),
            ('dice-run', '--coeff-range', '0.9,0.5'),
            ('dice-run', '--n', '21', '--count', '4', '--weights', '0.5,0.5,0.5'),
            ('dice-run', '--dataset', os.path.join(self.tmp.name, 'missing.bin')),
            ('dice-table', '--out', os.path.join(self.tmp.name, 'no', 'such', 'dir', 'r.json')),
        ):
            code, _, err = run(*argv)
            self.assertEqual(code, 2, argv)
            self.assertEqual(set(json.loads(err)), {"error", "message"}, argv)

    def test_run_writes_report(self):
        report_path = os.path.join(self.tmp.name, 'report.json')
        pcs_path = os.path.join(self.tmp.name, 'pcs.csv')
        code, out, _ = run('dice-run', '--n', '21', '--count', '20', '--seed', '3', '--threads', '1',
                           '--out', report_path, '--emit-pca', pcs_path)
        self.assertEqual(code, 0)
        with open(report_path) as f:
            report = json.load(f)
        self.assertEqual(report, json.loads(out))
        self.assertEqual((report["train_size"], report["test_size"]), (14, 6))
        self.assertEqual(report["config"]["n"], 21)
        with open(pcs_path) as f:
            self.assertEqual(f.readline().strip(), 'pc1,pc2,label')


if __name__ == '__main__':
    unittest.main()
