"""On-disk containers: datasets, volumes, reconstructions, TF debug dumps.

Every container is a directory with a manifest.json plus raw little-endian
float64 slab files, row-major. Nothing time- or host-dependent is written,
so identical inputs produce byte-identical containers. Volumes reuse the
reconstruction slab naming (phase_* holds the real part, absorption_* the
imaginary part).
"""

from __future__ import annotations

import json
from pathlib import Path

import numpy as np
from PIL import Image

from .forward import IntensityDataset, PermittivityVolume
from .leds import IlluminationSet
from .optics import OpticalConfig
from .recon import ReconParams, ReconstructionVolume
from .transfer import band_support

__all__ = [
    "write_dataset",
    "read_dataset",
    "write_volume",
    "read_volume",
    "write_recon",
    "read_recon",
    "write_preview",
    "export_tf_slab",
    "read_tf_slab",
]

_F8 = "<f8"


def _dump_json(path: Path, doc: dict):
    path.write_text(json.dumps(doc, indent=2, sort_keys=True) + "\n")


def _load_json(path: Path) -> dict:
    return json.loads(path.read_text())


def _write_slab(path: Path, arr: np.ndarray):
    path.write_bytes(np.ascontiguousarray(arr, dtype=_F8).tobytes())


def _read_slab(path: Path, shape) -> np.ndarray:
    arr = np.frombuffer(path.read_bytes(), dtype=_F8)
    expect = int(np.prod(shape))
    if arr.size != expect:
        raise ValueError(
            f"{path} holds {arr.size} values, manifest says {expect}"
        )
    return arr.reshape(shape).copy()


def write_dataset(ds: IntensityDataset, path) -> Path:
    """Dataset directory: manifest.json + one led_{l:04}.bin per LED."""
    path = Path(path)
    path.mkdir(parents=True, exist_ok=True)
    manifest = {
        "format": "idtomo-dataset",
        "cfg": ds.cfg.to_dict(),
        "illum": json.loads(ds.illum.to_json()),
        "provenance": ds.provenance,
        "shape": list(ds.images.shape),
        "dtype": _F8,
        "background": (
            None if ds.background is None else [float(b) for b in ds.background]
        ),
    }
    _dump_json(path / "manifest.json", manifest)
    for l in range(len(ds)):
        _write_slab(path / f"led_{l:04}.bin", ds.images[l])
    return path


def read_dataset(path) -> IntensityDataset:
    path = Path(path)
    man = _load_json(path / "manifest.json")
    if man.get("format") != "idtomo-dataset":
        raise ValueError(f"{path} is not a dataset container")
    cfg = OpticalConfig.from_dict(man["cfg"])
    illum = IlluminationSet.from_json(json.dumps(man["illum"]))
    L, ny, nx = man["shape"]
    images = np.empty((L, ny, nx), dtype=np.float64)
    for l in range(L):
        images[l] = _read_slab(path / f"led_{l:04}.bin", (ny, nx))
    bg = man.get("background")
    return IntensityDataset(
        images, illum, cfg,
        background=None if bg is None else np.asarray(bg, dtype=np.float64),
        provenance=man["provenance"],
    )


def write_volume(vol: PermittivityVolume, path) -> Path:
    path = Path(path)
    path.mkdir(parents=True, exist_ok=True)
    manifest = {
        "format": "idtomo-volume",
        "slice_z": [float(z) for z in vol.slice_z],
        "dz": vol.dz,
        "shape": list(vol.shape),
        "dtype": _F8,
    }
    _dump_json(path / "manifest.json", manifest)
    for m in range(vol.n_slices):
        _write_slab(path / f"phase_{m:03}.bin", vol.eps_re[m])
        _write_slab(path / f"absorption_{m:03}.bin", vol.eps_im[m])
    return path


def read_volume(path) -> PermittivityVolume:
    path = Path(path)
    man = _load_json(path / "manifest.json")
    if man.get("format") != "idtomo-volume":
        raise ValueError(f"{path} is not a volume container")
    M, ny, nx = man["shape"]
    vol = np.empty((M, ny, nx), dtype=np.complex128)
    for m in range(M):
        vol[m] = _read_slab(path / f"phase_{m:03}.bin", (ny, nx))
        vol[m] += 1j * _read_slab(path / f"absorption_{m:03}.bin", (ny, nx))
    return PermittivityVolume(vol, man["slice_z"], man["dz"])


def write_preview(arr: np.ndarray, path, bits: int = 16) -> tuple[float, float]:
    """Min/max-normalized grayscale PNG; returns the recorded (min, max)."""
    lo = float(np.min(arr))
    hi = float(np.max(arr))
    span = hi - lo if hi > lo else 1.0
    norm = (arr - lo) / span
    if bits == 16:
        img = Image.fromarray(np.round(norm * 65535).astype(np.uint16))
    elif bits == 8:
        img = Image.fromarray(np.round(norm * 255).astype(np.uint8), mode="L")
    else:
        raise ValueError(f"preview depth must be 8 or 16 bits, got {bits}")
    img.save(path)
    return lo, hi


def write_recon(recon: ReconstructionVolume, path, cfg: OpticalConfig | None = None,
                params: ReconParams | None = None, previews: bool = True) -> Path:
    """Reconstruction directory mirroring the dataset layout."""
    path = Path(path)
    path.mkdir(parents=True, exist_ok=True)
    preview_meta: dict[str, dict] = {}
    for m in range(recon.n_slices):
        _write_slab(path / f"phase_{m:03}.bin", recon.phase[m])
        _write_slab(path / f"absorption_{m:03}.bin", recon.absorption[m])
        if previews:
            for name, slab in ((f"phase_{m:03}.png", recon.phase[m]),
                               (f"absorption_{m:03}.png", recon.absorption[m])):
                lo, hi = write_preview(slab, path / name, bits=16)
                preview_meta[name] = {"min": lo, "max": hi}
    manifest = {
        "format": "idtomo-recon",
        "slice_z": [float(z) for z in recon.slice_z],
        "shape": list(recon.phase.shape),
        "dtype": _F8,
        "params": None if params is None else params.to_dict(),
        "previews": preview_meta,
    }
    if cfg is not None:
        lateral, axial = band_support(cfg)
        manifest["band_cycles_per_um"] = {"lateral": lateral, "axial": axial}
    _dump_json(path / "manifest.json", manifest)
    return path


def read_recon(path) -> ReconstructionVolume:
    path = Path(path)
    man = _load_json(path / "manifest.json")
    if man.get("format") != "idtomo-recon":
        raise ValueError(f"{path} is not a reconstruction container")
    M, ny, nx = man["shape"]
    phase = np.empty((M, ny, nx), dtype=np.float64)
    absorption = np.empty_like(phase)
    for m in range(M):
        phase[m] = _read_slab(path / f"phase_{m:03}.bin", (ny, nx))
        absorption[m] = _read_slab(path / f"absorption_{m:03}.bin", (ny, nx))
    return ReconstructionVolume(phase, absorption, man["slice_z"])


def export_tf_slab(h: np.ndarray, path_base, l: int, m: int, z: float,
                   ux: float, uy: float) -> Path:
    """Raw dump of one transfer-function slab plus its JSON sidecar.

    The .bin file interleaves (re, im) little-endian float64 pairs in
    row-major bin order; the sidecar records which (LED, slice) it is.
    """
    base = Path(path_base)
    base.parent.mkdir(parents=True, exist_ok=True)
    data = np.ascontiguousarray(h, dtype="<c16")
    Path(str(base) + ".bin").write_bytes(data.tobytes())
    _dump_json(Path(str(base) + ".json"), {
        "l": l, "m": m, "z": z, "ux": ux, "uy": uy, "shape": list(h.shape),
    })
    return Path(str(base) + ".bin")


def read_tf_slab(path_base) -> tuple[np.ndarray, dict]:
    base = Path(path_base)
    side = _load_json(Path(str(base) + ".json"))
    ny, nx = side["shape"]
    arr = np.frombuffer(Path(str(base) + ".bin").read_bytes(), dtype="<c16")
    return arr.reshape(ny, nx).copy(), side
