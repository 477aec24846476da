"""Moment-matching reduction of RC descriptor systems."""

import numpy as np
import pytest
import scipy.sparse as sp

from vialab.errors import ConfigError, IOError_
from vialab.mor import (ReducedModel, StateSpaceRC, Stimulus, dc_gain,
                        fit_table, load_reduced, reduce_arnoldi, save_reduced,
                        transfer_function, validate_reduction)


def ladder_system(n=60, n_in=2, seed=3):
    """A well-conditioned RC ladder with random positive couplings."""
    rng = np.random.default_rng(seed)
    main = sp.diags(2.0 + rng.random(n))
    off = sp.diags(-0.8 * np.ones(n - 1), offsets=1)
    g = (main + off + off.T).tocsr()
    c = sp.diags(1e-6 * (1.0 + rng.random(n))).tocsr()
    b = sp.lil_matrix((n, n_in))
    for j in range(n_in):
        b[j * (n - 1) // max(n_in - 1, 1), j] = 1.0
    b = b.tocsr()
    return StateSpaceRC(g=g, c=c, b=b, l=b.copy(),
                        input_names=tuple(f"i{j}" for j in range(n_in)),
                        output_names=tuple(f"i{j}" for j in range(n_in)))


def test_reduction_preserves_dc_gain_exactly():
    full = ladder_system()
    red = reduce_arnoldi(full, order=8)
    np.testing.assert_allclose(dc_gain(red), dc_gain(full), rtol=1e-9)


def test_reduced_matrices_are_symmetric_and_stable():
    red = reduce_arnoldi(ladder_system(), order=8)
    np.testing.assert_allclose(red.g_hat, red.g_hat.T, atol=1e-12)
    np.testing.assert_allclose(red.c_hat, red.c_hat.T, atol=1e-18)
    assert np.all(np.linalg.eigvalsh(red.g_hat) > 0)
    assert np.all(np.linalg.eigvalsh(red.c_hat) > 0)


def test_transfer_function_matches_full_model():
    full = ladder_system()
    red = reduce_arnoldi(full, order=10)
    s = 1j * 2 * np.pi * np.geomspace(1e2, 1e5, 12)
    h_full = transfer_function(full, s)
    h_red = transfer_function(red, s)
    err = np.abs(h_full - h_red).max() / np.abs(h_full).max()
    assert err < 1e-6


def test_deflation_caps_the_order():
    # the input only reaches a 3-node island, so the Krylov space saturates
    # at dimension 3 regardless of the requested order
    blocks = [np.array([[2.0, -1.0, 0.0], [-1.0, 2.0, -1.0], [0.0, -1.0, 2.0]]),
              np.eye(5) * 3.0]
    g = sp.block_diag(blocks).tocsr()
    c = sp.identity(8, format="csr") * 1e-6
    b = sp.lil_matrix((8, 1))
    b[0, 0] = 1.0
    full = StateSpaceRC(g=g, c=c, b=b.tocsr(), l=b.tocsr(),
                        input_names=("p",), output_names=("p",))
    red = reduce_arnoldi(full, order=6)
    assert red.requested_order == 6
    assert red.order == 3
    np.testing.assert_allclose(dc_gain(red), dc_gain(full), rtol=1e-9)


def test_validate_reduction_reports_small_errors():
    full = ladder_system()
    red = reduce_arnoldi(full, order=10)
    report = validate_reduction(
        full, red, Stimulus("step", duration=2e-5, dt=2e-7),
        freq_grid=np.geomspace(1e2, 1e5, 5))
    assert report["order"] == red.order
    assert report["max_relative_error"] < 1e-4
    assert report["rms_relative_error"] <= report["max_relative_error"]
    assert report["max_freq_response_error"] < 1e-3


def test_sine_stimulus_supported():
    full = ladder_system()
    red = reduce_arnoldi(full, order=10)
    report = validate_reduction(
        full, red,
        Stimulus("sine", duration=2e-5, dt=2e-7, frequencies=[5e4, 1e5]))
    assert report["max_relative_error"] < 1e-4


def test_save_load_round_trip(tmp_path):
    red = reduce_arnoldi(ladder_system(), order=6)
    path = tmp_path / "model.rom"
    save_reduced(red, path)
    text = path.read_text()
    assert text.startswith("reduced-rc-model v1")
    back = load_reduced(path)
    np.testing.assert_array_equal(back.g_hat, red.g_hat)
    np.testing.assert_array_equal(back.c_hat, red.c_hat)
    np.testing.assert_array_equal(back.b_hat, red.b_hat)
    np.testing.assert_array_equal(back.l_hat, red.l_hat)
    assert back.input_names == red.input_names
    # the projection basis is not serialized
    assert back.v.size == 0


def test_load_rejects_corrupt_file(tmp_path):
    path = tmp_path / "bad.rom"
    path.write_text("reduced-rc-model v1\norder 4\n")
    with pytest.raises(IOError_):
        load_reduced(path)


def test_order_must_be_positive():
    with pytest.raises(ConfigError):
        reduce_arnoldi(ladder_system(), order=0)


def test_fit_table_pwl_log_interpolates():
    x = np.geomspace(1e6, 1e10, 30)
    y = 2.0 * np.sqrt(x / 1e9)
    fit = fit_table(x, y, kind="pwl-log")
    # knots reproduce exactly; between knots the log-space chords of a
    # smooth curve stay within a fraction of a percent at this density
    np.testing.assert_allclose(fit(x), y, rtol=1e-12)
    xs = np.geomspace(2e6, 8e9, 11)
    np.testing.assert_allclose(fit(xs), 2.0 * np.sqrt(xs / 1e9), rtol=1e-2)


def test_fit_table_rational_handles_smooth_curves():
    x = np.geomspace(1e2, 1e6, 40)
    y = 1.0 / (1.0 + x / 1e4)
    fit = fit_table(x, y, kind="rational")
    xs = np.geomspace(2e2, 5e5, 9)
    np.testing.assert_allclose(fit(xs), 1.0 / (1.0 + xs / 1e4), rtol=1e-2)
