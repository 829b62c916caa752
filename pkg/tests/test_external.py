"""External estimator subprocess protocol, including fault injection."""

import sys
import textwrap

import pytest

from epsplan.errors import EstimatorContractError, ExternalEstimatorError
from epsplan.estimation import (
    BoundCache,
    EstimatorSet,
    EstimatorSpec,
    ExternalEstimatorClient,
)


def stub(body: str) -> list[str]:
    """A python subprocess that answers each ESTIMATE line with `body`."""
    template = textwrap.dedent(
        """
        import sys
        for line in sys.stdin:
            parts = line.split()
            if not parts or parts[0] != "ESTIMATE":
                continue
            name, tier = parts[1], int(parts[2])
        __BODY__
            sys.stdout.flush()
        """
    )
    code = template.replace(
        "__BODY__", textwrap.indent(textwrap.dedent(body).strip(), "    ")
    )
    return [sys.executable, "-u", "-c", code]


class TestProtocol:
    def test_round_trip(self):
        with ExternalEstimatorClient(stub('print("2 4")')) as client:
            assert client.estimate(0, "drive", 0) == (2.0, 4.0)

    def test_request_format_reaches_process(self):
        body = 'print(f"{tier} {tier + 10}")'
        with ExternalEstimatorClient(stub(body)) as client:
            assert client.estimate(0, "drive", 0) == (0.0, 10.0)
            assert client.estimate(0, "drive", 2) == (2.0, 12.0)

    def test_reversed_bounds_contract_error(self):
        with ExternalEstimatorClient(stub('print("4 2")')) as client:
            with pytest.raises(EstimatorContractError):
                client.estimate(0, "drive", 0)

    def test_malformed_response(self):
        with ExternalEstimatorClient(stub('print("banana")')) as client:
            with pytest.raises(ExternalEstimatorError) as err:
                client.estimate(0, "drive", 0)
        assert err.value.kind == "malformed"

    def test_wrong_arity_response(self):
        with ExternalEstimatorClient(stub('print("1 2 3")')) as client:
            with pytest.raises(ExternalEstimatorError) as err:
                client.estimate(0, "drive", 0)
        assert err.value.kind == "malformed"

    def test_timeout(self):
        body = "import time; time.sleep(60)"
        with ExternalEstimatorClient(stub(body), timeout_s=0.2) as client:
            with pytest.raises(ExternalEstimatorError) as err:
                client.estimate(0, "drive", 0)
        assert err.value.kind == "timeout"

    def test_process_death_mid_call(self):
        body = "raise SystemExit(1)"
        with ExternalEstimatorClient(stub(body), timeout_s=5) as client:
            with pytest.raises(ExternalEstimatorError) as err:
                client.estimate(0, "drive", 0)
        assert err.value.kind == "process-exit"

    def test_dead_process_on_second_call(self):
        with ExternalEstimatorClient(stub('print("1 2")\nbreak')) as client:
            assert client.estimate(0, "a", 0) == (1.0, 2.0)
            with pytest.raises(ExternalEstimatorError) as err:
                client.estimate(0, "a", 1)
            assert err.value.kind in ("process-exit", "timeout")


class TestCacheDegradation:
    def table(self):
        return (
            EstimatorSet(
                [EstimatorSpec(1, 4, 0.0), EstimatorSpec(2, 4, 1.0), EstimatorSpec(2, 2, 2.0)]
            ),
        )

    def test_fault_marks_tiers_unavailable(self):
        with ExternalEstimatorClient(stub('print("oops")')) as client:
            cache = BoundCache(self.table(), names=["a"], source=client)
            assert cache.estimate_next(0) is None
            assert cache.tiers_remaining(0) == 0
            assert not cache.touched(0)
            assert [f.kind for f in cache.faults] == ["malformed"]

    def test_partial_progress_kept_after_fault(self):
        body = textwrap.dedent(
            """
            if tier == 0:
                print("1 4")
            else:
                print("nope")
            """
        ).strip()
        with ExternalEstimatorClient(stub(body)) as client:
            cache = BoundCache(self.table(), names=["a"], source=client)
            assert cache.estimate_next(0) == (1.0, 4.0)
            assert cache.estimate_next(0) is None
            assert cache.touched(0)
            assert cache.bounds(0) == (1.0, 4.0)
            assert cache.tiers_remaining(0) == 0

    def test_contract_fault_recorded(self):
        with ExternalEstimatorClient(stub('print("9 1")')) as client:
            cache = BoundCache(self.table(), names=["a"], source=client)
            assert cache.estimate_next(0) is None
            assert [f.kind for f in cache.faults] == ["contract"]
