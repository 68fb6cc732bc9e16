import pytest

from gpsl.kernels import ModelParams, ParticleSpec

_RESULTS = {}


@pytest.fixture
def unit():
    """Unit-free parameters with r_p / r_C = 0.1 for a particle of mass m0."""
    return ModelParams.unit_free(gamma=1.0, r_C=1.0, G=0.1)


@pytest.fixture
def proton():
    return ParticleSpec(1.0)


@pytest.fixture
def criterion(request):
    """Record one acceptance-criterion verdict: criterion(n, ok, detail)."""
    seen = []

    def record(n, ok, detail):
        seen.append(n)
        _RESULTS[n] = (bool(ok), detail)
        return ok

    yield record
    if not seen:
        n = getattr(request.node.function, "criterion_id", request.node.name)
        _RESULTS[n] = (False, "test raised before reporting")


def pytest_terminal_summary(terminalreporter):
    if not _RESULTS:
        return
    terminalreporter.section("acceptance criteria")
    for n in sorted(_RESULTS, key=lambda k: (not isinstance(k, int), k if isinstance(k, int) else 0, str(k))):
        ok, detail = _RESULTS[n]
        terminalreporter.write_line(f"{'PASS' if ok else 'FAIL'} criterion {n}: {detail}")
