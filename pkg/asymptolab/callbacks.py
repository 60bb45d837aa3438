"""Hooks run by :class:`asymptolab.borel.BorelSolver` after every fixed-point iteration.

Action callbacks *do* something with the solver (stop it, log, checkpoint, raise);
condition callbacks decide *whether* their action runs and compose with ``& | ~ ^``.
"""
import os
import logging
from abc import ABC, abstractmethod

import dill

from .exceptions import DivergenceError
from .utils import safe_mkdir as _safe_mkdir


class _LoggerMixin:
    r"""A mix-in class that has a standard Python `logger`.

    :param logger: The logger or its name (str). Defaults to the 'asymptolab' logger.
    :type logger: str or ``logging.Logger``
    """

    def __init__(self, logger=None):
        if not logger:
            self.logger = logging.getLogger('asymptolab')
        elif isinstance(logger, str):
            self.logger = logging.getLogger(logger)
        else:
            self.logger = logger


class BaseCallback(ABC, _LoggerMixin):
    r"""Base class of all callbacks; subclass `ActionCallback` or `ConditionCallback` instead.

    :param logger: The logger (or its name) to be used for this callback.
    :type logger: str or ``logging.Logger``
    """

    def __init__(self, logger=None):
        _LoggerMixin.__init__(self, logger=logger)

    @abstractmethod
    def __call__(self, solver):
        pass  # pragma: no cover


class ActionCallback(BaseCallback):
    r"""Base class of callbacks that act on the solver."""

    def conditioned_on(self, condition_callback):
        if not isinstance(condition_callback, ConditionCallback):
            raise TypeError(f'{condition_callback} is not an instance of ConditionCallback')
        return condition_callback.set_action_callback(self)


class StopCallback(ActionCallback):
    r"""Ends the current ``solver.solve()`` call after this iteration.

    .. note::
        Use it behind a `ConditionCallback`, otherwise the solver stops after the first iteration.
    """

    def __call__(self, solver):
        solver._stop_iterating = True


class CheckpointCallback(ActionCallback):
    r"""Pickles the solver internals (current iterate included) with ``dill``.

    :param ckpt_dir: Directory of the checkpoints, created at instantiation time.
    :type ckpt_dir: str
    :param prefix: File name prefix, defaults to ``'omega'``.
    :type prefix: str
    :param logger: The logger (or its name) to be used for this callback.
    :type logger: str or ``logging.Logger``
    """

    def __init__(self, ckpt_dir, prefix='omega', logger=None):
        super(CheckpointCallback, self).__init__(logger=logger)
        self.ckpt_dir = ckpt_dir
        self.prefix = prefix
        _safe_mkdir(ckpt_dir)

    def __call__(self, solver):
        fname = os.path.join(self.ckpt_dir, f"{self.prefix}-iter{solver.iteration:04d}.internals")
        with open(fname, 'wb') as f:
            dill.dump(solver.get_internals("all"), f)
        self.logger.info(f"Saved checkpoint to {fname} at iteration {solver.iteration}")


class ReportCallback(ActionCallback):
    r"""Logs the iteration count and the latest increment, norm and increment ratio."""

    def __call__(self, solver):
        h = solver.metrics_history
        last = {key: (values[-1] if values else float('nan')) for key, values in h.items()}
        self.logger.info(
            f"iteration {solver.iteration}: increment = {last.get('increment', float('nan')):.3e}, "
            f"norm = {last.get('norm', float('nan')):.6g}, ratio = {last.get('ratio', float('nan')):.4f}"
        )


class DivergenceCallback(ActionCallback):
    r"""Raises :class:`asymptolab.exceptions.DivergenceError`; pair it with `RepeatedMetricUp`."""

    def __call__(self, solver):
        increments = solver.metrics_history.get('increment', [])
        tail = ', '.join(f'{v:.3e}' for v in increments[-4:])
        raise DivergenceError(
            f"fixed-point increments keep growing after {solver.iteration} iterations ({tail}); "
            f"reduce epsilon0 or the size of the forcing and coefficients"
        )


class ConditionCallback(BaseCallback):
    r"""Base class of callbacks that decide whether an action runs.
    Subclasses overwrite ``.condition``. Instances combine (short-circuit) with
    ``&`` (and), ``|`` (or), ``~`` (not) and ``^`` (xor).

    :param logger: The logger (or its name) to be used for this callback.
    :type logger: str or ``logging.Logger``
    """

    def __init__(self, logger=None):
        super(ConditionCallback, self).__init__(logger=logger)
        self.action_callback = None

    def set_action_callback(self, action_callback):
        if not isinstance(action_callback, ActionCallback):
            raise TypeError(f'{action_callback} is not an instance of ActionCallback')
        self.action_callback = action_callback
        return self

    @abstractmethod
    def condition(self, solver) -> bool:
        pass  # pragma: no cover

    def __call__(self, solver):
        if self.condition(solver):
            if self.action_callback:
                self.logger.debug(f"{self} met, running {self.action_callback}")
                self.action_callback(solver)
            else:
                self.logger.warning(f"{self} met, but it has no action callback; skipping")

    def __and__(self, other):
        return AndCallback(condition_callbacks=[self, other], logger=self.logger)

    def __or__(self, other):
        return OrCallback(condition_callbacks=[self, other], logger=self.logger)

    def __invert__(self):
        return NotCallback(condition_callback=self, logger=self.logger)

    def __xor__(self, other):
        return XorCallback(condition_callbacks=[self, other], logger=self.logger)


class AndCallback(ConditionCallback):
    r"""True iff no sub-condition is False; ``c1 & c2 & c3`` builds one."""

    def __init__(self, condition_callbacks, logger=None):
        super(AndCallback, self).__init__(logger=logger)
        self.condition_callbacks = condition_callbacks

    def condition(self, solver) -> bool:
        return all(cb.condition(solver) for cb in self.condition_callbacks)


class OrCallback(ConditionCallback):
    r"""True iff some sub-condition is True; ``c1 | c2 | c3`` builds one."""

    def __init__(self, condition_callbacks, logger=None):
        super(OrCallback, self).__init__(logger=logger)
        self.condition_callbacks = condition_callbacks

    def condition(self, solver) -> bool:
        return any(cb.condition(solver) for cb in self.condition_callbacks)


class NotCallback(ConditionCallback):
    r"""Negation of a sub-condition; ``~c`` builds one."""

    def __init__(self, condition_callback, logger=None):
        super(NotCallback, self).__init__(logger=logger)
        self.condition_callback = condition_callback

    def condition(self, solver) -> bool:
        return not self.condition_callback.condition(solver)


class XorCallback(ConditionCallback):
    r"""True iff an odd number of sub-conditions are True; ``c1 ^ c2`` builds one."""

    def __init__(self, condition_callbacks, logger=None):
        super(XorCallback, self).__init__(logger=logger)
        self.condition_callbacks = condition_callbacks

    def condition(self, solver) -> bool:
        return sum(1 for cb in self.condition_callbacks if cb.condition(solver)) % 2 == 1


class TrueCallback(ConditionCallback):
    def condition(self, solver) -> bool:
        return True


class FalseCallback(ConditionCallback):
    def condition(self, solver) -> bool:
        return False


class OnFirstIteration(ConditionCallback):
    def condition(self, solver) -> bool:
        return solver.iteration == 1


class PeriodIteration(ConditionCallback):
    r"""True when the iteration count equals :math:`\mathrm{period}\times n + \mathrm{offset}`.

    :param period: Period of the callback.
    :type period: int
    :param offset: Offset of the period, defaults to 0.
    :type offset: int
    """

    def __init__(self, period, offset=0, logger=None):
        super(PeriodIteration, self).__init__(logger=logger)
        if period < 1:
            raise ValueError(f"period must be a positive integer, got {period}")
        self.period = period
        self.offset = offset % period

    def condition(self, solver) -> bool:
        return solver.iteration % self.period == self.offset


class MetricBelow(ConditionCallback):
    r"""True when the latest value of a metric is below a threshold.

    :param metric: Key of ``solver.metrics_history``, defaults to ``'increment'``.
    :type metric: str
    :param threshold: The threshold.
    :type threshold: float
    """

    def __init__(self, metric='increment', threshold=1e-10, logger=None):
        super(MetricBelow, self).__init__(logger=logger)
        self.metric = metric
        self.threshold = threshold

    def condition(self, solver) -> bool:
        history = solver.metrics_history[self.metric]
        return bool(history) and history[-1] < self.threshold

    def __repr__(self):
        return f'MetricBelow({self.metric} < {self.threshold:g})'


class _RepeatedMetricChange(ConditionCallback):
    def __init__(self, metric='increment', repetition=1, logger=None):
        super(_RepeatedMetricChange, self).__init__(logger=logger)
        self.metric = metric
        self.times_required = repetition
        self.so_far = 0

    @abstractmethod
    def _last_satisfied(self, last, second2last):
        return last > second2last

    def condition(self, solver) -> bool:
        history = solver.metrics_history[self.metric]
        if len(history) >= 2 and self._last_satisfied(last=history[-1], second2last=history[-2]):
            self.so_far += 1
        else:
            self.so_far = 0
        return self.so_far >= self.times_required


class RepeatedMetricUp(_RepeatedMetricChange):
    r"""True once a metric has grown by at least ``at_least_by`` for ``repetition`` consecutive iterations.

    :param at_least_by: The margin, defaults to 0.
    :type at_least_by: float
    :param metric: Key of ``solver.metrics_history``, defaults to ``'increment'``.
    :type metric: str
    :param repetition: Number of consecutive increases required.
    :type repetition: int
    """

    def __init__(self, at_least_by=0.0, metric='increment', repetition=1, logger=None):
        super(RepeatedMetricUp, self).__init__(metric=metric, repetition=repetition, logger=logger)
        self.at_least_by = at_least_by

    def _last_satisfied(self, last, second2last):
        return last > second2last + self.at_least_by


class RepeatedMetricDown(_RepeatedMetricChange):
    r"""True once a metric has dropped by at least ``at_least_by`` for ``repetition`` consecutive iterations."""

    def __init__(self, at_least_by=0.0, metric='increment', repetition=1, logger=None):
        super(RepeatedMetricDown, self).__init__(metric=metric, repetition=repetition, logger=logger)
        self.at_least_by = at_least_by

    def _last_satisfied(self, last, second2last):
        return last <= second2last - self.at_least_by


class RepeatedMetricConverge(_RepeatedMetricChange):
    r"""True once consecutive values of a metric stay within ``epsilon`` for ``repetition`` iterations."""

    def __init__(self, epsilon, metric='norm', repetition=1, logger=None):
        super(RepeatedMetricConverge, self).__init__(metric=metric, repetition=repetition, logger=logger)
        self.epsilon = abs(epsilon)

    def _last_satisfied(self, last, second2last):
        return abs(last - second2last) < self.epsilon


class RepeatedMetricDiverge(_RepeatedMetricChange):
    r"""True once consecutive values of a metric differ by more than ``gap`` for ``repetition`` iterations."""

    def __init__(self, gap, metric='norm', repetition=1, logger=None):
        super(RepeatedMetricDiverge, self).__init__(metric=metric, repetition=repetition, logger=logger)
        self.gap = abs(gap)

    def _last_satisfied(self, last, second2last):
        return abs(last - second2last) > self.gap
