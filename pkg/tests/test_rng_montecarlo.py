import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from gbmpaths import montecarlo
from gbmpaths.montecarlo import Estimate, chunk_sizes
from gbmpaths.rng import RngStream

u64 = st.integers(0, 2**64 - 1)


@given(u64, u64)
def test_same_key_same_draws(seed, sid):
    a = RngStream(seed, sid).normals(16)
    b = RngStream(seed, sid).normals(16)
    assert np.array_equal(a, b)


@given(u64, st.integers(0, 1000))
def test_substreams_differ(seed, i):
    root = RngStream(seed)
    assert not np.array_equal(root.substream(i).uniforms(8), root.substream(i + 1).uniforms(8))


def test_uniforms_open_interval():
    u = RngStream(1).uniforms(100_000)
    assert u.min() > 0.0 and u.max() < 1.0
    assert np.all(np.isfinite(RngStream(1).normals(100_000)))


def test_rejects_oversized_seed():
    with pytest.raises(ValueError):
        RngStream(2**64)


def test_substreams_uncorrelated():
    root = RngStream(5)
    x, y = root.substream(0).normals(200_000), root.substream(1).normals(200_000)
    assert abs(np.corrcoef(x, y)[0, 1]) < 4 / np.sqrt(200_000)


def test_chunk_sizes():
    assert chunk_sizes(10, 4) == [4, 4, 2]
    assert sum(chunk_sizes(100_000)) == 100_000
    with pytest.raises(ValueError):
        chunk_sizes(0)


def test_constant_estimate_has_zero_stderr():
    est = montecarlo.run(lambda n, s: np.ones(n), 1000, RngStream(0))
    assert est.mean == 1.0 and est.stderr == 0.0 and est.n == 1000


def test_worker_count_does_not_change_result():
    draw = lambda n, s: s.normals(n) ** 2  # noqa: E731
    one = montecarlo.run(draw, 50_000, RngStream(9), chunk_size=4096, workers=1)
    four = montecarlo.run(draw, 50_000, RngStream(9), chunk_size=4096, workers=4)
    assert one == four


def test_nonfinite_samples_counted(caplog):
    def draw(n, s):
        v = s.normals(n)
        v[:10] = np.nan
        return v

    est = montecarlo.run(draw, 2000, RngStream(2), chunk_size=1000)
    assert est.nonfinite == 20 and est.n == 1980
    assert "non-finite" in caplog.text


def test_complex_z_scores_componentwise():
    est = Estimate(1 + 2j, 0.5 + 0.25j, 100)
    assert est.z_scores(0.5 + 2.5j) == (1.0, -2.0)
    assert est.agrees(0.5 + 2.5j, k=2) and not est.agrees(0.5 + 2.5j, k=1.5)


def test_normal_mean_within_tolerance():
    est = montecarlo.run(lambda n, s: s.normals(n), 100_000, RngStream(42))
    assert est.agrees(0.0)
