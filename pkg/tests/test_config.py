import logging

import pytest

from tupa_mrp.config import Config
from tupa_mrp.logger import get_logger, setup_logger


@pytest.fixture
def empty_cwd(tmp_path, monkeypatch):
    monkeypatch.chdir(tmp_path)
    monkeypatch.setenv('HOME', str(tmp_path))
    return tmp_path


def test_defaults_without_a_file(empty_cwd):
    config = Config()
    assert config.config_path is None
    assert config.getint('epochs') == 20
    assert config.getint('exact_limit') == 5040
    assert config.getbool('multitask') is False
    assert config.get('nothing', 'fallback') == 'fallback'


def test_file_in_working_directory_wins(empty_cwd):
    (empty_cwd / 'tupa_mrp.ini').write_text('[Training]\nepochs = 3\nmultitask = yes\n', encoding='utf-8')
    config = Config()
    assert config.config_path == empty_cwd / 'tupa_mrp.ini'
    assert config.getint('epochs') == 3
    assert config.getbool('multitask') is True
    assert config.getint('restarts') == 10


def test_explicit_path_must_exist(empty_cwd):
    with pytest.raises(FileNotFoundError):
        Config('absent.ini')


@pytest.mark.parametrize('body', [
    '[Training]\nepochs = 0\n',
    '[Training]\nfeature_buckets = lots\n',
    '[Evaluation]\niterations = -1\n',
])
def test_invalid_values(empty_cwd, body):
    path = empty_cwd / 'bad.ini'
    path.write_text(body, encoding='utf-8')
    with pytest.raises(ValueError):
        Config(str(path))


def test_template_is_a_valid_config(empty_cwd):
    path = Config.write_template(empty_cwd / 'nested' / 'tupa_mrp.ini')
    config = Config(str(path))
    for key, value in Config.DEFAULTS.items():
        if key != 'data_dir':
            assert str(config.get(key)).lower() == str(value).lower(), key


def test_loggers_share_the_package_prefix():
    assert get_logger('oracle').name == 'tupa_mrp.oracle'
    assert get_logger().name == 'tupa_mrp'


def test_setup_logger_is_idempotent():
    root = setup_logger(level=logging.WARNING)
    handlers = list(root.handlers)
    assert setup_logger(level=logging.DEBUG) is root
    assert root.handlers == handlers
    assert root.level == logging.DEBUG


def test_logger_docs_describe_behaviour():
    assert setup_logger.__doc__.strip().startswith('Configure the root logger')
    assert get_logger.__doc__.strip().startswith('Package logger')
