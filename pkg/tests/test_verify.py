import pytest

from inexact_gmres import verify


@pytest.mark.parametrize("suite,trials", [("qre", 12), ("stls", 50), ("nur", 5),
                                          ("rgap", 6), ("theorem", 2)])
def test_small_sweeps_pass(suite, trials):
    res = verify.run_suite(suite, trials=trials, seed=11)
    assert res.ok, res.summary()
    assert len(res.trials) == trials and res.worst.slack >= 0.0


def test_sweeps_are_deterministic():
    a = verify.run_suite("stls", trials=20, seed=4)
    b = verify.run_suite("stls", trials=20, seed=4)
    assert [t.slack for t in a.trials] == [t.slack for t in b.trials]


def test_parallel_matches_serial():
    a = verify.run_suite("qre", trials=8, seed=1)
    b = verify.run_suite("qre", trials=8, seed=1, workers=2)
    assert [t.slack for t in a.trials] == [t.slack for t in b.trials]


def test_qre_covers_all_deltas():
    res = verify.run_suite("qre", trials=4)
    for delta, trial in zip(verify.QRE_DELTAS, res.trials):
        assert "delta=%g" % delta in trial.label


def test_summary_and_errors():
    res = verify.run_suite("qre", trials=3)
    assert res.summary().startswith("qre: 3/3 passed")
    with pytest.raises(ValueError):
        verify.run_suite("qre", trials=0)
    with pytest.raises(ValueError):
        verify.run_suite("bogus")
    assert [r.name for r in verify.run_suites("all", trials=1)] == list(verify.TRIALS)
