import threading

import pytest

from precursor.background import BackgroundQueue, replicate


@pytest.mark.parametrize("n", [pytest.param(1, id="inline"), pytest.param(4, id="threaded")])
def test_map_keeps_submission_order(n):
    with BackgroundQueue(n) as queue:
        assert queue.map(lambda x: x * x, range(20)) == [x * x for x in range(20)]


def test_inline_queue_runs_on_caller_thread():
    caller = threading.get_ident()
    with BackgroundQueue(1) as queue:
        future = queue.run(threading.get_ident)
    assert future.result() == caller
    assert queue.pool is None


def test_first_failure_is_reraised():
    def boom(x):
        if x == 3:
            raise RuntimeError("three")
        return x

    with BackgroundQueue(2) as queue:
        with pytest.raises(RuntimeError, match="three"):
            queue.map(boom, range(6))


def test_queue_needs_a_worker():
    with pytest.raises(ValueError):
        BackgroundQueue(0)


def test_replicate_is_ordered_by_seed():
    assert replicate(lambda seed: seed + 100, [5, 1, 3], workers=3) == [105, 101, 103]
