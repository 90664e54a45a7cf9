import numpy as np
import pytest
from hypothesis import given, strategies as st

from stochmesh.exceptions import DegenerateMeshError
from stochmesh.mesh import (
    GAP_TOL,
    Mesh,
    MeshMapping,
    SamplingConfig,
    _draw_sorted,
    apply_mapping,
    max_gap,
    sample_sorted_mesh,
    uniform_mesh,
)

seeds = st.integers(min_value=0, max_value=2**64 - 1)


def test_mesh_validation():
    with pytest.raises(ValueError):
        Mesh([0.5, 0.5])
    with pytest.raises(ValueError):
        Mesh([0.0, 0.5])
    with pytest.raises(ValueError):
        Mesh([0.5, 1.0])
    with pytest.raises(ValueError):
        Mesh([])
    with pytest.raises(ValueError):
        Mesh([0.2, np.nan])


def test_mesh_is_immutable():
    m = Mesh([0.25, 0.5])
    with pytest.raises(ValueError):
        m.interior[0] = 0.1
    with pytest.raises(AttributeError):
        m.interior = np.array([0.1])


def test_nodes_and_steps():
    m = Mesh([0.25, 0.5])
    np.testing.assert_array_equal(m.nodes, [0.0, 0.25, 0.5, 1.0])
    np.testing.assert_allclose(m.steps, [0.25, 0.25, 0.5])
    assert m.n == 2 and len(m) == 2
    assert max_gap(m) == 0.5


def test_uniform_mesh():
    np.testing.assert_allclose(uniform_mesh(9).steps, 0.1)
    assert max_gap(uniform_mesh(9)) == pytest.approx(0.1)
    with pytest.raises(ValueError):
        uniform_mesh(0)


def test_sampling_config_validation():
    with pytest.raises(ValueError):
        SamplingConfig(0, 5)
    with pytest.raises(ValueError):
        SamplingConfig(5, 0)
    with pytest.raises(ValueError):
        SamplingConfig(5, 5, master_seed=-1)
    with pytest.raises(ValueError):
        SamplingConfig(5, 5, master_seed=2**64)
    with pytest.raises(ValueError):
        SamplingConfig(5, 5, distribution="normal")
    SamplingConfig(5, 5, master_seed=2**64 - 1)


def test_sample_index_range():
    cfg = SamplingConfig(3, 4)
    with pytest.raises(ValueError):
        sample_sorted_mesh(cfg, 3)
    with pytest.raises(ValueError):
        sample_sorted_mesh(cfg, -1)


def test_sampling_is_reproducible_and_index_addressed():
    cfg = SamplingConfig(100, 7, master_seed=42)
    a = [sample_sorted_mesh(cfg, i) for i in range(100)]
    b = [sample_sorted_mesh(cfg, i) for i in reversed(range(100))][::-1]
    assert a == b
    # a sample depends only on (seed, index), not on m
    assert sample_sorted_mesh(SamplingConfig(1000, 7, 42), 5) == a[5]
    assert sample_sorted_mesh(SamplingConfig(100, 7, 43), 5) != a[5]


def test_samples_valid_on_many_configs():
    rng = np.random.default_rng(0)
    for _ in range(10_000):
        n = int(rng.integers(1, 20))
        cfg = SamplingConfig(50, n, int(rng.integers(0, 2**63)))
        x = sample_sorted_mesh(cfg, int(rng.integers(0, 50))).interior
        assert x.size == n
        assert np.all(x > 0) and np.all(x < 1) and np.all(np.diff(x) > 0)


def test_redraw_removes_close_points():
    class Scripted:
        def __init__(self, draws):
            self.draws = list(draws)

        def random(self, k):
            out, self.draws = self.draws[:k], self.draws[k:]
            return np.array(out)

    x = _draw_sorted(Scripted([0.3, 0.3 + 1e-14, 0.0, 0.7, 0.6]), 3)
    np.testing.assert_array_equal(x, [0.3, 0.6, 0.7])


def test_sample_marginal_is_uniform():
    # pooled points of n-point uniform samples are Uniform(0, 1)
    cfg = SamplingConfig(4000, 5, 1)
    pts = np.concatenate([sample_sorted_mesh(cfg, i).interior for i in range(cfg.m)])
    hist, _ = np.histogram(pts, bins=10, range=(0, 1))
    expected = pts.size / 10
    chi2 = float(np.sum((hist - expected) ** 2 / expected))
    assert chi2 < 27.9   # 99.9% quantile, 9 dof


def test_mapping_constructors():
    ident = MeshMapping.identity()
    assert ident(0.3) == 0.3
    p = MeshMapping.power(0.5)
    assert p(0.25) == pytest.approx(0.5)
    with pytest.raises(ValueError):
        MeshMapping.power(0.0)
    t = MeshMapping.tabulated([0, 0.5, 1], [0, 0.25, 1])
    assert t(0.75) == pytest.approx(0.625)
    with pytest.raises(ValueError):
        MeshMapping.tabulated([0, 0.5, 0.9], [0, 0.25, 1])
    with pytest.raises(ValueError):
        MeshMapping.tabulated([0, 0.5, 1], [0, 0.5, 0.5])
    np.testing.assert_array_equal(t.knots()[:, 0], [0, 0.5, 1])


def test_apply_mapping():
    m = uniform_mesh(3)
    assert apply_mapping(MeshMapping.identity(), m) is m
    mapped = apply_mapping(MeshMapping.power(2.0), m)
    np.testing.assert_allclose(mapped.interior, [1 / 16, 1 / 4, 9 / 16])
    squash = MeshMapping.tabulated([0, 0.5, 1], [0, 1e-14, 1])
    with pytest.raises(DegenerateMeshError):
        apply_mapping(squash, uniform_mesh(3))


@given(seed=seeds, idx=st.integers(0, 999), n=st.integers(1, 60))
def test_property_sample_valid(seed, idx, n):
    m = sample_sorted_mesh(SamplingConfig(1000, n, seed), idx)
    steps = m.steps
    assert m.n == n
    assert np.all(steps > GAP_TOL)
    assert steps.sum() == pytest.approx(1.0)


@given(exponent=st.floats(0.05, 5.0), n=st.integers(1, 200))
def test_property_power_mapping_is_monotone(exponent, n):
    q = MeshMapping.power(exponent)
    s = np.linspace(0, 1, 50)
    v = q(s)
    assert v[0] == 0.0 and v[-1] == 1.0
    assert np.all(np.diff(v) > 0)


@given(st.lists(st.floats(0.01, 10.0), min_size=1, max_size=30), st.integers(1, 40))
def test_property_tabulated_mapping_preserves_order(widths, n):
    q_knots = np.concatenate(([0.0], np.cumsum(widths)))
    q_knots /= q_knots[-1]
    q_knots[-1] = 1.0
    q = MeshMapping.tabulated(np.linspace(0, 1, q_knots.size), q_knots)
    mapped = apply_mapping(q, uniform_mesh(n))
    assert np.all(np.diff(mapped.nodes) > 0)
