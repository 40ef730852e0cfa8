from typing import Callable, Dict, NamedTuple

from .errors import ConfigError


class RegisteredTest(NamedTuple):
    factory: Callable
    measure: str


class RegisteredMethod(NamedTuple):
    run: Callable
    needs_test: bool


TEST_REGISTRY: Dict[str, RegisteredTest] = {}
METHOD_REGISTRY: Dict[str, RegisteredMethod] = {}


def register_test(name, factory, *, measure):
    """Registers a conditional independence test under *name*.

    For example::

        class MyTest(CITest):
            name = 'mytest'
            measure = 'corr'
            def run(self, arrays):
                ...

        register_test('mytest', MyTest, measure='corr')

    :param str name: The name used on the command line and in
        experiment configurations
    :param factory: Called with keyword arguments to build the test
    :param str measure: The unconditional measure the test reduces to
        for pairwise analysis, one of ``'corr'``, ``'dcor'`` or
        ``'mi'``"""
    assert name not in TEST_REGISTRY
    TEST_REGISTRY[name] = RegisteredTest(factory, measure)


def register_method(name, run, *, needs_test=True):
    """Registers a causal discovery method under *name*.

    :param str name: The method name
    :param run: The function ``run(ds, cfg, test)`` returning a
        :class:`~lagwurm.graph.TimeSeriesGraph`
    :param bool needs_test: ``False`` for methods that ignore the
        conditional independence test (adaptive Lasso)"""
    assert name not in METHOD_REGISTRY
    METHOD_REGISTRY[name] = RegisteredMethod(run, needs_test)


def registered_test(name) -> RegisteredTest:
    try:
        return TEST_REGISTRY[name]
    except KeyError:
        raise ConfigError(
            f'unknown test {name!r}, expected one of '
            f'{", ".join(sorted(TEST_REGISTRY))}') from None


def make_test(name, **params):
    return registered_test(name).factory(**params)


def method_for(name):
    try:
        return METHOD_REGISTRY[name]
    except KeyError:
        raise ConfigError(
            f'unknown method {name!r}, expected one of '
            f'{", ".join(sorted(METHOD_REGISTRY))}') from None
