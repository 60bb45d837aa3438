import pandas as pd
import pytest

from asymptolab.cli import main, build_parser, EXIT_OK, EXIT_FAILURE, EXIT_USAGE
from asymptolab.config import load_config, config_from_mapping, reference_config_path
from asymptolab.pipeline import Experiment
from asymptolab.utils import read_csv


@pytest.fixture
def out_dir(tmp_path, monkeypatch):
    out = tmp_path / 'out'
    monkeypatch.setenv('ASYMPTOLAB_OUT', str(out))
    return out


def test_parser_commands():
    parser = build_parser()
    args = parser.parse_args(['flatness', '--which', 'outer', '--jobs', '2'])
    assert args.command == 'flatness'
    assert args.which == 'outer'
    assert args.jobs == 2
    assert not args.no_solve


def test_help_and_usage_errors():
    assert main(['--help']) == EXIT_OK
    assert main([]) == EXIT_USAGE
    assert main(['integrate']) == EXIT_USAGE
    assert main(['flatness', '--which', 'middle']) == EXIT_USAGE


def test_bad_config_is_a_usage_error(tmp_path, out_dir):
    path = tmp_path / 'broken.yaml'
    path.write_text("spec: [unclosed\n", encoding='utf-8')
    assert main(['validate', '--config', str(path)]) == EXIT_USAGE
    path.write_text("grids:\n  n_t1: 2\n", encoding='utf-8')
    assert main(['validate', '--config', str(path)]) == EXIT_USAGE
    assert main(['validate', '--config', str(tmp_path / 'missing.yaml')]) == EXIT_USAGE


def test_invalid_ladder_is_a_failure(tmp_path, out_dir):
    path = tmp_path / 'ladder.yaml'
    path.write_text("eps_ladder: [0.1, 0.2]\n", encoding='utf-8')
    assert main(['validate', '--config', str(path)]) == EXIT_FAILURE


def test_validate_reports_failed_hypothesis(tmp_path, out_dir):
    # Q / R = 2 lies outside this annulus
    path = tmp_path / 'annulus.yaml'
    path.write_text("spec:\n  annulus: {r1: 2.5, r2: 3.0, alpha: -0.3, beta: 0.3}\n", encoding='utf-8')
    assert main(['validate', '--config', str(path)]) == EXIT_FAILURE
    frame = read_csv(out_dir / 'validation.csv')
    assert list(frame.columns) == ['check_name', 'pass', 'detail']
    checks = dict(zip(frame.check_name, frame['pass']))
    assert not checks['sectorial-annulus']
    assert checks['intermediate-order']
    assert checks['leading-exponent']


@pytest.fixture
def small_config(tmp_path):
    def write(ladder='[0.2]', overlaps='[1]', name='small.yaml'):
        path = tmp_path / name
        path.write_text(
            "grids: {n_m: 30, cutoff: 6.0, r_max: 4.0}\n"
            f"geometry: {{flatness_overlaps: {overlaps}}}\n"
            f"eps_ladder: {ladder}\n",
            encoding='utf-8',
        )
        return str(path)
    return write


def test_reference_validate_passes(out_dir):
    assert main(['validate']) == EXIT_OK
    frame = read_csv(out_dir / 'validation.csv')
    assert frame['pass'].all()
    header = (out_dir / 'validation.csv').read_text(encoding='utf-8').splitlines()[0]
    assert header == f"# config_sha256={load_config(reference_config_path()).config_sha256}"


def test_solve_then_sample(small_config, out_dir):
    config = small_config()
    assert main(['solve', '--config', config]) == EXIT_OK
    log = read_csv(out_dir / 'convergence.csv')
    assert len(log) == 24 + 32
    assert (log.status == 'ok').all()
    assert (log.contraction_factor < 1).all()
    for kind, iota in [('outer', 24), ('inner', 32)]:
        assert main([kind, '--config', config, '--no-solve']) == EXIT_OK
        summary = read_csv(out_dir / f'{kind}_summary.csv')
        assert len(summary) == iota
        assert (out_dir / kind / f'{kind}_h00_e00.csv').exists()


def test_missing_checkpoint_is_a_failure(small_config, out_dir):
    assert main(['outer', '--config', small_config(), '--no-solve']) == EXIT_FAILURE
    summary = read_csv(out_dir / 'outer_summary.csv')
    assert summary.status.str.startswith('FileNotFoundError').all()


def test_empty_ladder_is_a_no_op(small_config, out_dir):
    config = small_config(ladder='[]')
    for command in ('solve', 'outer', 'inner'):
        assert main([command, '--config', config]) == EXIT_OK
    assert not (out_dir / 'omega').exists()


def test_flatness_exit_codes(small_config, out_dir, monkeypatch):
    config = small_config(ladder='[0.2, 0.14, 0.1, 0.07, 0.05]')
    assert main(['flatness', '--which', 'outer', '--config', config]) == EXIT_OK
    assert read_csv(out_dir / 'flatness' / 'flatness_outer.csv').order.tolist() == pytest.approx([10], rel=0.15)
    # fewer than 4 eps values cannot be fitted
    assert main(['flatness', '--config', small_config(ladder='[0.2, 0.1]', name='short.yaml')]) == EXIT_FAILURE

    wrong = pd.DataFrame([dict(order=5.0, r_squared=0.999, h=1, which='inner')])
    monkeypatch.setattr(Experiment, 'flatness', lambda self, which: wrong)
    assert main(['flatness', '--which', 'inner']) == EXIT_FAILURE
    poor = pd.DataFrame([dict(order=8.0, r_squared=0.9, h=1, which='inner')])
    monkeypatch.setattr(Experiment, 'flatness', lambda self, which: poor)
    assert main(['flatness', '--which', 'inner']) == EXIT_FAILURE
    monkeypatch.setattr(Experiment, 'flatness', lambda self, which: pd.DataFrame())
    assert main(['flatness', '--which', 'inner']) == EXIT_FAILURE


def test_demos_rerun_is_byte_identical(tmp_path, monkeypatch):
    files = {}
    for run in ('first', 'second'):
        out = tmp_path / run
        monkeypatch.setenv('ASYMPTOLAB_OUT', str(out))
        assert main(['demos', '--seed', '3']) == EXIT_OK
        files[run] = {p.relative_to(out): p.read_bytes() for p in sorted(out.rglob('*.csv'))}
    assert files['first'] == files['second']
    assert len(files['first']) == 4

    expected = config_from_mapping(dict(load_config(reference_config_path()).raw, seed=3)).config_sha256
    for content in files['first'].values():
        assert content.decode('utf-8').splitlines()[0] == f"# config_sha256={expected}"


def test_solve_refuses_invalid_config(tmp_path, out_dir):
    path = tmp_path / 'annulus.yaml'
    path.write_text("spec:\n  annulus: {r1: 2.5, r2: 3.0, alpha: -0.3, beta: 0.3}\neps_ladder: [0.2]\n",
                    encoding='utf-8')
    assert main(['solve', '--config', str(path)]) == EXIT_FAILURE
    assert not (out_dir / 'convergence.csv').exists()
