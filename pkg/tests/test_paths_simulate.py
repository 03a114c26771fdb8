import numpy as np
import pytest

from lecam_euler.errors import GridMismatchError, HorizonError, InvalidGridError
from lecam_euler.sde_core.paths import BrownianPath, GridPath, cell_grid, check_grid, uniform_grid
from lecam_euler.sde_core.simulate import (
    euler_from_brownian,
    euler_maruyama,
    euler_recursion,
    refine_brownian,
    sample_brownian,
    sampling_indices,
    simulate_diffusion,
    simulate_euler,
)


@pytest.mark.parametrize("times", [[], [0.1, 0.2], [0.0, 0.5, 0.5], [0.0, 1.0, 0.5], [0.0, np.nan]])
def test_bad_grids(times):
    with pytest.raises(InvalidGridError):
        check_grid(times)


def test_gridpath_evaluation():
    p = GridPath([0.0, 1.0, 3.0], [0.0, 2.0, 0.0])
    assert p(0.5) == 1.0 and p(2.0) == 1.0 and p(3.0) == 0.0
    with pytest.raises(HorizonError):
        p(3.5)
    with pytest.raises(HorizonError):
        p(-0.1)
    with pytest.raises(ValueError):
        p.values[0] = 1.0


def test_restrict_and_locate():
    p = GridPath(uniform_grid(1.0, 0.25), np.arange(5.0))
    assert np.array_equal(p.locate([0.25, 0.75]), [1, 3])
    with pytest.raises(GridMismatchError):
        p.locate([0.3])
    r = p.restrict(0.6)
    assert r.horizon == 0.6 and r.values[-1] == pytest.approx(2.4)


def test_cell_grid_knots_are_exact():
    h, n, R = 0.1, 7, 13
    t = cell_grid(h, n, R)
    assert t.size == n * R + 1
    assert np.array_equal(t[::R], np.arange(n + 1) * h)


def test_brownian_variance():
    """Var W(1) over 10^4 independent paths lies in 1 +- 0.05."""
    grid = uniform_grid(1.0, 0.125)
    ends = np.array([sample_brownian(grid, (3, r)).values[-1] for r in range(10_000)])
    assert abs(ends.mean()) < 0.04
    assert abs(ends.var() - 1.0) < 0.05


def test_brownian_reproducible():
    grid = uniform_grid(2.0, 0.1)
    assert np.array_equal(sample_brownian(grid, 9).values, sample_brownian(grid, 9).values)


def test_refinement_keeps_old_points_and_matches_bridge_law():
    grid = np.array([0.0, 1.0])
    mids = []
    for r in range(10_000):
        w = sample_brownian(grid, (1, r))
        v = refine_brownian(w, [0.5, 1.5], (2, r))
        assert np.array_equal(v.locate([0.0, 1.0]), [0, 2])
        assert v(1.0) == w(1.0)
        mids.append(v(0.5) - 0.5 * w(1.0))
    mids = np.array(mids)
    # Brownian bridge from 0 to 1 has variance 1/4 at its midpoint
    assert abs(mids.var() - 0.25) < 0.25 * 0.05
    assert abs(mids.mean()) < 0.02


def test_euler_maruyama_batch_matches_rows(tanh_cos):
    dt = np.diff(cell_grid(0.1, 5, 4))
    dW = np.random.default_rng(0).standard_normal((3, dt.size)) * np.sqrt(dt)
    X = euler_maruyama(tanh_cos, np.array([0.0, 1.0, -1.0]), dW, dt)
    for r, x0 in enumerate([0.0, 1.0, -1.0]):
        x = [x0]
        for k in range(dt.size):
            x.append(x[-1] + tanh_cos.b(x[-1]) * dt[k] + tanh_cos.sigma(x[-1]) * dW[r, k])
        assert np.allclose(X[r], x, rtol=0, atol=1e-14)


def test_diffusion_strong_self_convergence(tanh_cos):
    """E|X_T^delta - X_T^finest| shrinks as the fine step shrinks."""
    errs = {4: [], 16: []}
    fine = cell_grid(1.0, 1, 256)
    for r in range(200):
        w = sample_brownian(fine, (5, r))
        ref = simulate_diffusion(tanh_cos, w, 0.0).values[-1]
        for k in errs:
            coarse = BrownianPath(w.times[::k], w.values[::k], w.seed)
            errs[k].append(abs(simulate_diffusion(tanh_cos, coarse, 0.0).values[-1] - ref))
    assert np.mean(errs[4]) < 0.6 * np.mean(errs[16])


def test_euler_recursion_definition(tanh_cos):
    eps = np.array([0.3, -1.2, 0.7])
    Z = euler_recursion(tanh_cos, 0.2, 0.5, eps)
    for i in range(3):
        z = Z[i]
        assert Z[i + 1] == z + 0.2 * tanh_cos.b(z) + np.sqrt(0.2) * tanh_cos.sigma(z) * eps[i]


def test_euler_trajectory_residuals(tanh_cos):
    traj = simulate_euler(tanh_cos, 0.1, 20, 0.0, 4)
    assert traj.n == 20 and np.array_equal(traj.times, np.arange(21) * 0.1)
    assert np.max(np.abs(traj.residuals())) < 1e-14
    batch = euler_recursion(tanh_cos, 0.1, np.array([0.0, 0.0]), np.vstack([traj.eps, traj.eps]))
    assert np.array_equal(batch[0], traj.Z) and np.array_equal(batch[1], traj.Z)


def test_euler_from_brownian_increments(tanh_cos):
    h, n = 0.25, 4
    w = sample_brownian(cell_grid(h, n, 8), 2)
    traj = euler_from_brownian(tanh_cos, w, h, n, 0.0)
    dW = np.diff(w.values[::8])
    assert np.allclose(traj.eps * np.sqrt(h), dW, atol=1e-15)


def test_sampling_indices_mismatch():
    p = GridPath(uniform_grid(1.0, 0.3 / 3), np.zeros(11))
    with pytest.raises(GridMismatchError):
        sampling_indices(p, 0.15, 6)
    with pytest.raises(GridMismatchError):
        sampling_indices(p, 0.3, 4)
