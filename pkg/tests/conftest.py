import pytest

from cusptherm.coding import build_induced
from cusptherm.fuchsian import conjugate, markov_completion, punctured_torus_from_markov, thrice_punctured_sphere
from cusptherm.hypgeom import MobiusMap
from cusptherm.manhattan import build_pair
from cusptherm.potential import evaluate_tau
from cusptherm.pressure import TransferGraph

# a fixed hyperbolic map for conjugate pairs
CONJ = MobiusMap(1.3, 0.4, 0.2, (1 + 0.4 * 0.2) / 1.3)

ACCEPTANCE: dict = {}


def record(number: int, ok: bool, detail: str) -> None:
    ACCEPTANCE[number] = (ok, detail)


def pytest_terminal_summary(terminalreporter):
    if not ACCEPTANCE:
        return
    terminalreporter.section("acceptance criteria")
    for n in sorted(ACCEPTANCE):
        ok, detail = ACCEPTANCE[n]
        terminalreporter.write_line(f"criterion {n}: {'PASS' if ok else 'FAIL'}  {detail}")


@pytest.fixture(scope="session")
def torus():
    return punctured_torus_from_markov(3.0, 3.0, 3.0)


@pytest.fixture(scope="session")
def torus_far():
    return punctured_torus_from_markov(3.2, 3.0, markov_completion(3.2, 3.0, "upper"))


@pytest.fixture(scope="session")
def s03():
    return thrice_punctured_sphere()


@pytest.fixture(scope="session")
def torus_conj(torus):
    return conjugate(torus, CONJ)


@pytest.fixture(scope="session")
def torus_shift(torus):
    return build_induced(torus)


@pytest.fixture(scope="session")
def s03_shift(s03):
    return build_induced(s03)


@pytest.fixture(scope="session")
def torus_graph(torus_shift):
    return TransferGraph.from_shift(torus_shift)


@pytest.fixture(scope="session")
def s03_graph(s03_shift):
    return TransferGraph.from_shift(s03_shift)


@pytest.fixture(scope="session")
def torus_tau(torus, torus_shift):
    return evaluate_tau(torus, torus_shift)


@pytest.fixture(scope="session")
def s03_tau(s03, s03_shift):
    return evaluate_tau(s03, s03_shift)


@pytest.fixture(scope="session")
def conj_pair(torus, torus_conj, torus_shift):
    return build_pair(torus, torus_conj, shift=torus_shift)


@pytest.fixture(scope="session")
def far_pair(torus, torus_far, torus_shift):
    return build_pair(torus, torus_far, shift=torus_shift)


@pytest.fixture(scope="session")
def s03_conj_pair(s03, s03_shift):
    return build_pair(s03, conjugate(s03, CONJ), shift=s03_shift)


@pytest.fixture(scope="session")
def conj_curve(conj_pair):
    from cusptherm.manhattan import trace_curve

    return trace_curve(conj_pair)


@pytest.fixture(scope="session")
def far_curve(far_pair):
    from cusptherm.manhattan import trace_curve

    return trace_curve(far_pair)


@pytest.fixture(scope="session")
def markov_samples():
    from cusptherm.metric import MarkovPath, sample_path

    return sample_path(MarkovPath())
