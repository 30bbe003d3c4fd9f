import json
import os
import tempfile
import unittest
from pathlib import Path
from unittest.mock import patch

from helpers.config_helper import (ConfigHelper, config_digest, dump_config, load_config, load_gen_config,
                                   load_predictor_job)
from helpers.errors import ConfigError
from tests.fixtures import mlp_spec

MINIMAL = {'network': mlp_spec([2, 8, 3]).model_dump(mode='json')}


class TestConfigHelper(unittest.TestCase):

    def setUp(self):
        self.tmp = tempfile.TemporaryDirectory()
        self.dir = Path(self.tmp.name)

    def tearDown(self):
        self.tmp.cleanup()

    def _write(self, data, name='cfg.json'):
        path = self.dir / name
        path.write_text(json.dumps(data) if not isinstance(data, str) else data, encoding='utf-8')
        return path

    def test_defaults_applied(self):
        cfg = load_config(self._write(MINIMAL))
        self.assertEqual(cfg.batch_size, 32)
        self.assertEqual(cfg.momentum, 0.9)
        self.assertEqual(cfg.lr_schedule, 'cosine')
        self.assertEqual(cfg.policy.kind, 'full')

    def test_unknown_key_rejected_with_path(self):
        with self.assertRaises(ConfigError) as ctx:
            load_config(self._write(dict(MINIMAL, task={'id': 'blobs', 'colour': 'red'})))
        self.assertEqual(ctx.exception.key_path, 'task.colour')

    def test_smart_without_predictor(self):
        with self.assertRaises(ConfigError):
            load_config(self._write(dict(MINIMAL, policy={'kind': 'smart'})))

    def test_missing_predictor_file(self):
        with self.assertRaises(ConfigError) as ctx:
            load_config(self._write(dict(MINIMAL, policy={'kind': 'smart'}, predictor=str(self.dir / 'nope.frzp'))))
        self.assertEqual(ctx.exception.key_path, 'predictor')

    def test_policy_block_must_match_kind(self):
        with self.assertRaises(ConfigError):
            load_config(self._write(dict(MINIMAL, policy={'kind': 'linear', 'percentile': 0.5})))

    def test_invalid_json(self):
        with self.assertRaises(ConfigError):
            load_config(self._write('{"network": '))

    def test_top_level_must_be_object(self):
        for data in ([MINIMAL], 'null', '"full"'):
            with self.assertRaises(ConfigError) as ctx:
                load_config(self._write(data))
            self.assertIn('must hold a JSON object', str(ctx.exception))
        with self.assertRaises(ConfigError):
            load_gen_config(self._write([1, 2], name='gen.json'))

    def test_missing_file(self):
        with self.assertRaises(ConfigError):
            load_config(self.dir / 'absent.json')

    def test_overrides(self):
        cfg = load_config(self._write(MINIMAL), {'seed': 7, 'out_dir': None})
        self.assertEqual(cfg.seed, 7)
        self.assertEqual(cfg.out_dir, 'runs')

    def test_dump_load_round_trip(self):
        cfg = load_config(self._write(dict(MINIMAL, policy={'kind': 'gradnorm', 'percentile': 0.25})))
        dump_config(cfg, self.dir / 'dumped.json')
        again = load_config(self.dir / 'dumped.json')
        self.assertEqual(cfg, again)

    def test_digest(self):
        cfg = load_config(self._write(MINIMAL))
        self.assertEqual(config_digest(cfg), config_digest(cfg.model_copy(update={'name': 'renamed'})))
        self.assertNotEqual(config_digest(cfg), config_digest(cfg.model_copy(update={'lr': 0.01})))

    def test_gen_config_digest_tracks_relevant_fields(self):
        cfg = load_gen_config(self._write(MINIMAL))
        self.assertTrue(cfg.oracle_freeze)
        for field, value in (('window', 10), ('tailored_size', 64), ('generation_seed', 5)):
            self.assertNotEqual(config_digest(cfg), config_digest(cfg.model_copy(update={field: value})))

    def test_predictor_job_checks_datasets(self):
        with self.assertRaises(ConfigError) as ctx:
            load_predictor_job(self._write({'datasets': [str(self.dir / 'missing.frzd')]}))
        self.assertEqual(ctx.exception.key_path, 'datasets.0')

    def test_project_settings(self):
        settings_path = self._write({'runs_dir': 'elsewhere', 'default_jobs': 3}, 'config.json')
        with patch.dict(os.environ, {'FRZ_DATA_DIR': '/tmp/digits'}):
            helper = ConfigHelper(str(settings_path))
        self.assertEqual(helper.get_config('runs_dir'), 'elsewhere')
        self.assertEqual(helper.config.default_jobs, 3)
        self.assertEqual(helper.config.data_dir, '/tmp/digits')
        self.assertIsNone(helper.get_config('no_such_key'))


if __name__ == '__main__':
    unittest.main()
