import pandas as pd
import pytest

import stream_verify.cli as cli
from stream_verify.benchmarks import BenchmarkConfig
from stream_verify.report import History


@pytest.fixture
def log_dir(tmp_path, monkeypatch):
    directory = tmp_path / 'logs'
    monkeypatch.setattr(cli, 'LOG_DIR', directory)
    return directory


def test_run_writes_history_and_certificates(tmp_path, log_dir):
    config = BenchmarkConfig(max_ndof=60, output_dir=tmp_path / 'out', verbose=False)
    assert cli.run(config) == 0

    out = tmp_path / 'out' / config.run_name
    history = History.read_csv(out / 'history.csv')
    assert list(history.frame['ndof']) == [1, 9, 49]
    assert (out / 'certificates' / 'level_00.txt').read_text().startswith('# stream_verify certificate')
    assert len(list((out / 'certificates').glob('level_*.txt'))) == 3
    assert 'empirical rates' in (out / 'rates.txt').read_text()

    dat = (out / 'history.dat').read_text().splitlines()
    assert dat[0].startswith('# level ndof')
    assert len(dat) == 4
    assert not (out / 'matrices').exists()

    logs = list(log_dir.glob('square-poly_uniform_*.log'))
    assert len(logs) == 1
    assert 'RUN COMPLETE' in logs[0].read_text()


def test_export_matrices(tmp_path, log_dir):
    config = BenchmarkConfig(max_ndof=10, output_dir=tmp_path, export_matrices=True, verbose=False)
    assert cli.run(config) == 0
    matrices = tmp_path / config.run_name / 'matrices'
    assert (matrices / 'level_00_A_nc.coo').exists()
    frame = pd.read_csv(tmp_path / config.run_name / 'history.csv')
    assert len(frame) == 2
