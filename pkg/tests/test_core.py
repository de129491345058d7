import numpy as np
import pytest

from kdmc import (
    BackgroundParams,
    ParticleState,
    PiecewiseConstantField,
    RngStream,
    sample_maxwellian,
    standard_exponential,
)
from kdmc.core import (
    exponential_from_uniform,
    map_chunked,
    raw64,
    raw64_keyed,
    stream_keys,
    uniform_open_closed,
)
from conftest import StubRng, moment_check


class TestBackgroundParams:
    def test_valid(self):
        p = BackgroundParams(2.0, -1.0, 0.5, 0.1)
        assert p.collisionality(1.0) == pytest.approx(2.0 / 0.01)
        assert np.isfinite(p.collisionality(1e6))
        assert p.params_at(123.0) is p

    @pytest.mark.parametrize(
        "kwargs",
        [
            dict(sigma=0.0, u=0.0, temperature=1.0, eps=1.0),
            dict(sigma=-1.0, u=0.0, temperature=1.0, eps=1.0),
            dict(sigma=1.0, u=0.0, temperature=0.0, eps=1.0),
            dict(sigma=1.0, u=0.0, temperature=1.0, eps=0.0),
            dict(sigma=np.inf, u=0.0, temperature=1.0, eps=1.0),
            dict(sigma=1.0, u=np.nan, temperature=1.0, eps=1.0),
        ],
    )
    def test_invalid(self, kwargs):
        with pytest.raises(ValueError):
            BackgroundParams(**kwargs)

    def test_particle_state_finite(self):
        with pytest.raises(ValueError):
            ParticleState(np.nan, 0.0, 0.0)


class TestField:
    def test_lookup_and_clamp(self):
        cells = [BackgroundParams(s, 0.0, 1.0, 1.0) for s in (1.0, 2.0, 3.0)]
        field = PiecewiseConstantField(cells, breakpoints=(0.0, 1.0))
        assert field.params_at(-5.0) is cells[0]
        assert field.params_at(0.5) is cells[1]
        assert field.params_at(1.0) is cells[2]
        assert field.params_at(99.0) is cells[2]

    def test_validation(self):
        p = BackgroundParams(1.0, 0.0, 1.0, 1.0)
        with pytest.raises(ValueError):
            PiecewiseConstantField(())
        with pytest.raises(ValueError):
            PiecewiseConstantField((p, p), breakpoints=())
        with pytest.raises(ValueError):
            PiecewiseConstantField((p, p, p), breakpoints=(1.0, 1.0))
        with pytest.raises(ValueError):
            PiecewiseConstantField((p, p), breakpoints=(np.inf,))

    def test_single_cell_matches_homogeneous(self):
        # a one-cell field must be observationally identical to plain params
        from kdmc import simulate_kinetic

        p = BackgroundParams(1.7, 0.4, 1.3, 0.8)
        field = PiecewiseConstantField((p,))
        for i in range(8):
            a = simulate_kinetic(ParticleState(0.3, -1.1, 0.0), 2.0, p, RngStream(5, i))
            b = simulate_kinetic(ParticleState(0.3, -1.1, 0.0), 2.0, field, RngStream(5, i))
            assert a.final_state == b.final_state
            assert a.collisions_executed == b.collisions_executed


class TestRngStream:
    def test_replay_exact(self):
        a = RngStream(12345, 7)
        b = RngStream(12345, 7)
        assert np.array_equal(a.normal(size=100), b.normal(size=100))
        assert a.counter == b.counter == 100

    def test_draws_are_pure_functions_of_counter(self):
        # jumping the counter reproduces the tail of the sequence exactly
        a = RngStream(9, 3)
        seq = a.uniform_open_closed(size=50)
        b = RngStream(9, 3, counter=20)
        assert np.array_equal(seq[20:], b.uniform_open_closed(size=30))

    def test_distinct_streams_differ(self):
        a = RngStream(1, 0).uniform_open_closed(size=64)
        b = RngStream(1, 1).uniform_open_closed(size=64)
        assert not np.array_equal(a, b)
        # and are uncorrelated to MC accuracy
        assert abs(np.corrcoef(a, b)[0, 1]) < 0.5

    def test_keyed_matches_unkeyed(self):
        streams = np.arange(100, dtype=np.uint64)
        ctr = np.full(100, 17, dtype=np.uint64)
        keys = stream_keys(321, streams)
        assert np.array_equal(raw64_keyed(keys, ctr), raw64(321, streams, ctr))

    def test_uniform_open_closed_excludes_zero(self):
        u = RngStream(2, 0).uniform_open_closed(size=200_000)
        assert u.min() > 0.0
        assert u.max() <= 1.0

    def test_spawn(self):
        base = RngStream(77)
        child = base.spawn(5)
        assert child.seed == 77 and child.stream == 5 and child.counter == 0


class TestSampling:
    def test_maxwellian_pinned_draws(self):
        # mean of the distribution
        p = BackgroundParams(1.0, 0.0, 1.0, 1.0)
        assert sample_maxwellian(p, StubRng(normals=[0.0])) == 0.0
        # affine transform of a unit normal
        p = BackgroundParams(1.0, 3.0, 4.0, 0.5)
        assert sample_maxwellian(p, StubRng(normals=[1.0])) == pytest.approx(3.5)

    def test_maxwellian_moments(self):
        p = BackgroundParams(1.0, 1.0, 2.0, 1.0)
        rng = RngStream(42, 0)
        v = p.eps * p.u + np.sqrt(p.temperature) * rng.normal(size=1_000_000)
        assert abs(v.mean() - 1.0) <= 4 * np.sqrt(2.0 / 1e6)
        moment_check(v, target_var=2.0)

    def test_maxwellian_normality(self):
        n = 1_000_000
        z = RngStream(7, 0).normal(size=n)
        skew = np.mean(z**3)
        exkurt = np.mean(z**4) - 3.0
        assert abs(skew) < 5 * np.sqrt(6.0 / n)
        assert abs(exkurt) < 5 * np.sqrt(24.0 / n)

    def test_exponential_inverse_cdf(self):
        assert exponential_from_uniform(1.0) == 0.0
        assert exponential_from_uniform(np.exp(-1.0)) == pytest.approx(1.0)
        assert standard_exponential(StubRng(uniforms=[np.exp(-2.0)])) == pytest.approx(2.0)

    def test_exponential_moments(self):
        e = RngStream(3, 0).exponential(size=1_000_000)
        assert e.min() > 0.0 and np.isfinite(e).all()
        assert abs(e.mean() - 1.0) <= 0.004


class TestChunking:
    def test_thread_count_does_not_change_results(self):
        def work(lo, hi):
            ids = np.arange(lo, hi, dtype=np.uint64)
            return (uniform_open_closed(11, ids, np.uint64(0)),)

        (one,) = map_chunked(work, 10_000, threads=1, chunk=256)
        (four,) = map_chunked(work, 10_000, threads=4, chunk=256)
        assert np.array_equal(one, four)

    def test_rejects_empty(self):
        with pytest.raises(ValueError):
            map_chunked(lambda lo, hi: (np.zeros(hi - lo),), 0)
