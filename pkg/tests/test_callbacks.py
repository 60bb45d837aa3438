import shutil
from pathlib import Path

import dill
import pytest
from pytest import raises

from asymptolab.callbacks import StopCallback, CheckpointCallback, ReportCallback, DivergenceCallback
from asymptolab.callbacks import TrueCallback, FalseCallback, ConditionCallback, ActionCallback
from asymptolab.callbacks import OnFirstIteration, PeriodIteration, MetricBelow
from asymptolab.callbacks import RepeatedMetricDown, RepeatedMetricUp, RepeatedMetricDiverge, RepeatedMetricConverge
from asymptolab.callbacks import AndCallback, OrCallback, NotCallback, XorCallback
from asymptolab.exceptions import DivergenceError


class FakeSolver:
    """Just enough of a fixed-point solver for callbacks."""

    def __init__(self):
        self.iteration = 0
        self.metrics_history = {'increment': [], 'norm': [], 'ratio': []}
        self._stop_iterating = False

    def step(self, increment, norm=1.0):
        self.iteration += 1
        self.metrics_history['increment'].append(increment)
        self.metrics_history['norm'].append(norm)
        self.metrics_history['ratio'].append(float('nan'))

    def get_internals(self, var_names=None):
        return dict(iteration=self.iteration, metrics_history=self.metrics_history)


@pytest.fixture
def tmp_dir():
    tmp = Path('.') / 'test-tmp'
    yield tmp
    if tmp.exists() and tmp.is_dir():
        shutil.rmtree(tmp)


@pytest.fixture
def solver():
    return FakeSolver()


@pytest.fixture
def true_cb():
    return TrueCallback()


@pytest.fixture
def false_cb():
    return FalseCallback()


class Counter(ActionCallback):
    def __init__(self):
        super(Counter, self).__init__()
        self.calls = 0

    def __call__(self, solver):
        self.calls += 1


def test_stop_callback(solver):
    StopCallback()(solver)
    assert solver._stop_iterating


def test_checkpoint_callback(solver, tmp_dir):
    solver.step(0.5)
    callback = CheckpointCallback(ckpt_dir=tmp_dir, prefix='run')
    assert tmp_dir.is_dir()
    callback(solver)
    files = list(tmp_dir.glob('run-iter0001.internals'))
    assert len(files) == 1
    with open(files[0], 'rb') as f:
        internals = dill.load(f)
    assert internals['iteration'] == 1
    assert internals['metrics_history']['increment'] == [0.5]


def test_report_callback(solver, caplog):
    solver.step(1e-3, norm=2.0)
    with caplog.at_level('INFO', logger='asymptolab'):
        ReportCallback()(solver)
    assert 'iteration 1' in caplog.text
    assert 'increment = 1.000e-03' in caplog.text


def test_divergence_callback(solver):
    for inc in [1.0, 2.0, 4.0]:
        solver.step(inc)
    with raises(DivergenceError):
        DivergenceCallback()(solver)


def test_conditioned_action(solver, true_cb, false_cb):
    counter = Counter()
    assert counter.conditioned_on(true_cb) is true_cb
    true_cb(solver)
    assert counter.calls == 1
    Counter().conditioned_on(false_cb)(solver)
    with raises(TypeError):
        counter.conditioned_on(counter)
    with raises(TypeError):
        true_cb.set_action_callback(false_cb)


def test_logical_combinations(solver, true_cb, false_cb):
    assert (true_cb & true_cb).condition(solver)
    assert not (true_cb & false_cb).condition(solver)
    assert (true_cb | false_cb).condition(solver)
    assert not (false_cb | false_cb).condition(solver)
    assert (~false_cb).condition(solver)
    assert (true_cb ^ false_cb).condition(solver)
    assert not (true_cb ^ true_cb).condition(solver)
    assert isinstance(true_cb & false_cb, AndCallback)
    assert isinstance(true_cb | false_cb, OrCallback)
    assert isinstance(~true_cb, NotCallback)
    assert isinstance(true_cb ^ false_cb, XorCallback)
    assert XorCallback([true_cb, true_cb, true_cb]).condition(solver)


def test_iteration_conditions(solver):
    solver.step(1.0)
    assert OnFirstIteration().condition(solver)
    solver.step(0.5)
    assert not OnFirstIteration().condition(solver)
    assert PeriodIteration(2).condition(solver)
    assert not PeriodIteration(2, offset=1).condition(solver)
    with raises(ValueError):
        PeriodIteration(0)


def test_metric_below(solver):
    cb = MetricBelow('increment', threshold=1e-3)
    assert not cb.condition(solver)
    solver.step(1e-2)
    assert not cb.condition(solver)
    solver.step(1e-4)
    assert cb.condition(solver)
    assert 'increment' in repr(cb)


@pytest.mark.parametrize('callback_cls, values, kwargs', [
    (RepeatedMetricUp, [1.0, 2.0, 3.0, 4.0], dict(at_least_by=0.5)),
    (RepeatedMetricDown, [4.0, 3.0, 2.0, 1.0], dict(at_least_by=0.5)),
    (RepeatedMetricConverge, [1.0, 1.01, 1.015, 1.017], dict(epsilon=0.1)),
    (RepeatedMetricDiverge, [1.0, 2.0, 0.5, 3.0], dict(gap=0.1)),
])
def test_repeated_metric_change(solver, callback_cls, values, kwargs):
    cb = callback_cls(metric='increment', repetition=3, **kwargs)
    outcomes = []
    for v in values:
        solver.step(v)
        outcomes.append(cb.condition(solver))
    assert outcomes == [False, False, False, True]


def test_repeated_metric_resets(solver):
    cb = RepeatedMetricUp(metric='increment', repetition=2)
    outcomes = []
    for v in [1.0, 2.0, 1.5, 2.5, 3.5]:
        solver.step(v)
        outcomes.append(cb.condition(solver))
    assert outcomes == [False, False, False, False, True]


def test_custom_condition(solver):
    class AfterTwo(ConditionCallback):
        def condition(self, solver):
            return solver.iteration > 2

    counter = Counter()
    cb = counter.conditioned_on(AfterTwo())
    for _ in range(4):
        solver.step(1.0)
        cb(solver)
    assert counter.calls == 2
