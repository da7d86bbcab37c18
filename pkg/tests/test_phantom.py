"""Phantom rasterizers: geometry, bookkeeping, reproducibility."""

import numpy as np
import pytest

from idtomo import FrequencyGrid, OpticalConfig
from idtomo.phantom import (
    MARGIN_PX,
    PhantomSpec,
    helix_center,
    make_bar_target,
    make_beads,
    make_helix,
    make_phantom,
    make_two_layer_target,
    make_uniform_slab,
)


# --- beads -------------------------------------------------------------------


def test_beads_energy_matches_analytic_sphere():
    # fine sampling: slab-averaged squared contrast integrates to the
    # analytic (4/3) pi R^3 within the rasterization error
    cfg = OpticalConfig(wavelength_um=0.63, na=0.25, nx=256, ny=256, dx=0.125)
    grid = FrequencyGrid(cfg)
    r, dz, c = 6.0, 0.1, 1e-3
    half = int(np.ceil(r / dz)) + 1
    sz = dz * np.arange(-half, half + 1)
    vol = make_beads(count=1, radius_um=r, contrast=c, slice_z=sz, dz=dz,
                     grid=grid, cfg=cfg, seed=5, center_slice=half)
    num = float(np.sum(np.abs(vol.delta_eps) ** 2) * cfg.dx * cfg.dy * dz)
    ana = abs(c) ** 2 * (4.0 / 3.0) * np.pi * r**3
    assert abs(num - ana) / ana <= 0.02


def test_beads_zero_count_is_empty(grid32, cfg32):
    vol = make_beads(count=0, radius_um=2.0, contrast=1e-3, slice_z=[0.0],
                     dz=1.0, grid=grid32, cfg=cfg32)
    assert vol.delta_eps.shape == (1, 32, 32)
    assert np.all(vol.delta_eps == 0)


def test_beads_reproducible_by_seed(grid64, cfg64):
    kw = dict(count=3, radius_um=3.0, contrast=1e-4 + 5e-5j, slice_z=[0.0],
              dz=1.2, grid=grid64, cfg=cfg64, center_slice=0)
    a = make_beads(seed=7, **kw)
    b = make_beads(seed=7, **kw)
    c = make_beads(seed=8, **kw)
    assert np.array_equal(a.delta_eps, b.delta_eps)
    assert not np.array_equal(a.delta_eps, c.delta_eps)


def test_beads_respect_margins(grid64, cfg64):
    vol = make_beads(count=3, radius_um=3.0, contrast=1e-3, slice_z=[0.0],
                     dz=1.2, grid=grid64, cfg=cfg64, seed=7, center_slice=0)
    m = MARGIN_PX
    assert np.all(vol.delta_eps[:, :m, :] == 0)
    assert np.all(vol.delta_eps[:, -m:, :] == 0)
    assert np.all(vol.delta_eps[:, :, :m] == 0)
    assert np.all(vol.delta_eps[:, :, -m:] == 0)


def test_beads_errors(grid32, cfg32):
    with pytest.raises(ValueError, match="count must be >= 0"):
        make_beads(count=-1, radius_um=1.0, contrast=1e-3, slice_z=[0.0],
                   dz=1.0, grid=grid32, cfg=cfg32)
    with pytest.raises(ValueError, match="does not fit inside the margins"):
        make_beads(count=1, radius_um=5.0, contrast=1e-3, slice_z=[0.0],
                   dz=1.0, grid=grid32, cfg=cfg32)
    with pytest.raises(ValueError, match="center_slice 3 outside"):
        make_beads(count=1, radius_um=1.0, contrast=1e-3, slice_z=[0.0],
                   dz=1.0, grid=grid32, cfg=cfg32, center_slice=3)
    # 3 beads of diameter 6 um cannot coexist inside a 16 um box with margins
    with pytest.raises(ValueError, match="could not place"):
        make_beads(count=3, radius_um=3.0, contrast=1e-3, slice_z=[0.0],
                   dz=1.0, grid=grid32, cfg=cfg32, center_slice=0)


# --- helix -------------------------------------------------------------------


@pytest.fixture(scope="module")
def helix_slices(grid64, cfg64):
    pitch = 8.0
    sz = np.array([0.0, pitch / 4, pitch])
    vol = make_helix(pitch_um=pitch, helix_radius_um=6.0, tube_radius_um=2.0,
                     contrast=1e-3, slice_z=sz, dz=1.0, grid=grid64, cfg=cfg64)
    return vol.delta_eps.real


def test_helix_repeats_after_one_pitch(helix_slices):
    d = helix_slices
    assert d[0].max() > 0
    assert np.abs(d[2] - d[0]).max() <= 1e-12 * d[0].max()


def test_helix_quarter_pitch_is_rotation(helix_slices):
    d = helix_slices
    assert np.abs(d[1] - np.rot90(d[0], 3)).max() <= 1e-12 * d[0].max()


def test_helix_center_parametrization():
    x, y = helix_center(0.0, 8.0, 6.0, 16.0, 16.0)
    assert (x, y) == (22.0, 16.0)
    x, y = helix_center(2.0, 8.0, 6.0, 16.0, 16.0)
    assert abs(x - 16.0) < 1e-12 and abs(y - 22.0) < 1e-12


def test_helix_margin_check(grid32, cfg32):
    with pytest.raises(ValueError, match="boundary margin"):
        make_helix(pitch_um=8.0, helix_radius_um=10.0, tube_radius_um=2.0,
                   contrast=1e-3, slice_z=[0.0], dz=1.0, grid=grid32, cfg=cfg32)


# --- bar and two-layer targets -------------------------------------------------


def test_bar_target_geometry(grid64, cfg64):
    vol = make_bar_target(4.0, 1e-3, grid64, cfg64, dz=2.0, z=1.5)
    assert vol.delta_eps.shape == (1, 64, 64)
    assert vol.slice_z[0] == 1.5 and vol.dz == 2.0
    bars = vol.delta_eps[0].real
    # interior bar pixels carry the full contrast; gaps none
    assert bars.max() == pytest.approx(1e-3, rel=1e-12)
    assert bars.min() == 0.0
    # modulation along x only
    mid = bars[32, :]
    assert mid.max() > 0 and (mid == 0).any()
    assert np.abs(bars[20, :] - bars[40, :]).max() == 0.0


def test_bar_target_errors(grid32, cfg32):
    with pytest.raises(ValueError, match="below two pixels"):
        make_bar_target(0.9, 1e-3, grid32, cfg32, dz=1.0)
    with pytest.raises(ValueError, match="exceed the grid margins"):
        make_bar_target(6.0, 1e-3, grid32, cfg32, dz=1.0, n_bars=3)
    with pytest.raises(ValueError, match="axis must be"):
        make_bar_target(4.0, 1e-3, grid32, cfg32, dz=1.0, axis="z")


@pytest.fixture(scope="module")
def cfg128():
    return OpticalConfig(wavelength_um=0.63, na=0.25, nx=128, ny=128, dx=0.5)


def test_two_layer_target_values(cfg128):
    grid = FrequencyGrid(cfg128)
    vol = make_two_layer_target(height_nm=50.0, n_ph=1.52,
                                absorption_strength=5e-3, separation_um=10.0,
                                grid=grid, cfg=cfg128)
    assert np.array_equal(vol.slice_z, [0.0, 10.0])
    # slab-averaged phase contrast of a 50 nm step of index 1.52 over 10 um
    assert vol.delta_eps[1].real.max() == pytest.approx(6.552e-3, rel=1e-12)
    assert np.all(vol.delta_eps[1].imag == 0)
    assert vol.delta_eps[0].imag.max() == pytest.approx(5e-3, rel=1e-12)
    assert np.all(vol.delta_eps[0].real == 0)
    # the layers modulate along perpendicular axes: phase along y (row 64 is
    # the center bar, row 49 a gap), absorption along x
    ph = vol.delta_eps[1].real
    ab = vol.delta_eps[0].imag
    assert np.abs(ph[64, :] - ph[49, :]).max() > 0
    assert np.abs(ph[:, 30] - ph[:, 90]).max() == 0.0
    assert np.abs(ab[:, 64] - ab[:, 49]).max() > 0
    assert np.abs(ab[30, :] - ab[90, :]).max() == 0.0


def test_two_layer_zero_height_is_flat(cfg128):
    grid = FrequencyGrid(cfg128)
    vol = make_two_layer_target(height_nm=0.0, n_ph=1.52,
                                absorption_strength=5e-3, separation_um=10.0,
                                grid=grid, cfg=cfg128)
    assert np.all(vol.delta_eps[1] == 0)
    assert vol.delta_eps[0].imag.max() > 0


def test_two_layer_errors(cfg128):
    grid = FrequencyGrid(cfg128)
    with pytest.raises(ValueError, match="height must be >= 0"):
        make_two_layer_target(-1.0, 1.52, 5e-3, 10.0, grid, cfg128)
    with pytest.raises(ValueError, match="exceeds the slice thickness"):
        make_two_layer_target(11000.0, 1.52, 5e-3, 10.0, grid, cfg128)
    with pytest.raises(ValueError, match="whole\nmultiple|whole multiple"):
        make_two_layer_target(50.0, 1.52, 5e-3, 7.0, grid, cfg128)
    with pytest.raises(ValueError, match="absorption must be >= 0"):
        make_two_layer_target(50.0, 1.52, -5e-3, 10.0, grid, cfg128)


def test_uniform_slab_is_dc_only(grid32, cfg32):
    vol = make_uniform_slab(1e-3 + 5e-4j, [0.0, 2.0], 2.0, grid32, cfg32)
    assert vol.is_uniform
    spec = np.fft.fft2(vol.delta_eps[0])
    dc = abs(spec[0, 0])
    spec[0, 0] = 0.0
    assert np.abs(spec).max() <= 1e-12 * dc


# --- spec dispatch -------------------------------------------------------------


def test_make_phantom_dispatch_matches_direct(grid64, cfg64):
    spec = PhantomSpec(kind="beads", params={
        "count": 3, "radius_um": 3.0, "contrast": [1e-4, 5e-5],
        "slice_z": [0.0], "dz": 1.2, "seed": 7, "center_slice": 0,
    })
    via_spec = make_phantom(spec, grid64, cfg64)
    direct = make_beads(count=3, radius_um=3.0, contrast=1e-4 + 5e-5j,
                        slice_z=[0.0], dz=1.2, grid=grid64, cfg=cfg64,
                        seed=7, center_slice=0)
    assert np.array_equal(via_spec.delta_eps, direct.delta_eps)


def test_phantom_spec_json_round_trip():
    spec = PhantomSpec(kind="bar_target", params={"period_um": 4.0,
                                                  "contrast": [1e-3, 0.0],
                                                  "dz": 1.0})
    back = PhantomSpec.from_json(spec.to_json())
    assert back.kind == spec.kind and back.params == spec.params


def test_phantom_spec_rejects_unknown_kind():
    with pytest.raises(ValueError, match="unknown phantom kind"):
        PhantomSpec(kind="cube", params={})
