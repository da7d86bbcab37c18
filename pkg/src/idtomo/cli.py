"""Command-line front end.

One declarative JSON config describes a whole experiment (optics, LED
array, illumination pattern, phantom or external dataset, forward model,
reconstruction parameters); the subcommands each materialize one stage of
it under the output directory:

    idtomo phantom     -> <out>/phantom        volume container
    idtomo simulate    -> <out>/dataset        intensity dataset container
    idtomo tf          -> <out>/tf             raw TF slabs + previews
    idtomo reconstruct -> <out>/recon          reconstruction container
    idtomo report      -> <out>/report.json    metrics vs. truth

Every run is reproducible from the config plus the seed: nothing here
consults the clock, the host name, or any other ambient state. Failures
print a JSON error record to stderr and exit nonzero.
"""

from __future__ import annotations

import argparse
import json
import os
import sys
from concurrent.futures import ThreadPoolExecutor
from dataclasses import asdict, dataclass, field
from pathlib import Path

import numpy as np

from .containers import (
    export_tf_slab,
    read_dataset,
    read_recon,
    read_volume,
    write_dataset,
    write_preview,
    write_recon,
    write_volume,
)
from .forward import (
    IntensityDataset,
    PermittivityVolume,
    add_noise,
    simulate_intensity_born,
    simulate_intensity_multislice,
)
from .leds import (
    IlluminationSet,
    LedArray,
    pattern_pseudorandom,
    pattern_symmetric,
    select_brightfield,
)
from .metrics import (
    band_nrmse,
    bar_height_estimate,
    in_band_correlation,
    modulation_depth,
)
from .optics import FrequencyGrid, OpticalConfig, Pupil
from .phantom import PhantomSpec, make_phantom
from .recon import ReconParams, ReconstructionVolume, height_map, reconstruct
from .transfer import compute_tf_slice

MODELS = ("born", "born_full", "multislice")


@dataclass
class RunConfig:
    """Declarative description of a full experiment."""

    optics: dict = field(default_factory=dict)
    led_array: dict = field(default_factory=dict)
    pattern: dict = field(default_factory=lambda: {"kind": "full_brightfield"})
    model: str = "born"
    phantom: dict | None = None
    dataset: str | None = None
    recon: dict | None = None
    report: dict | None = None
    source_intensity: float = 1.0
    noise_std: float = 0.0
    edge_taper_px: int = 0
    seed: int = 0
    threads: int | None = None
    out: str = "idtomo-run"

    def __post_init__(self):
        if self.model not in MODELS:
            raise ValueError(
                f"unknown forward model {self.model!r}, expected one of {MODELS}"
            )

    @classmethod
    def from_dict(cls, d: dict) -> "RunConfig":
        known = set(cls.__dataclass_fields__)
        bad = set(d) - known
        if bad:
            raise ValueError(f"unknown config keys: {sorted(bad)}")
        return cls(**d)

    def to_dict(self) -> dict:
        return asdict(self)


def load_config(path) -> RunConfig:
    return RunConfig.from_dict(json.loads(Path(path).read_text()))


def _optics(rc: RunConfig) -> OpticalConfig:
    if not rc.optics:
        raise ValueError("config has no 'optics' section")
    return OpticalConfig.from_dict(rc.optics)


def build_illumination(rc: RunConfig, cfg: OpticalConfig) -> IlluminationSet:
    array = LedArray.from_dict(rc.led_array) if rc.led_array else LedArray()
    full = select_brightfield(array, cfg, source_intensity=rc.source_intensity)
    kind = rc.pattern.get("kind", "full_brightfield")
    if kind == "full_brightfield":
        return full
    if kind == "symmetric":
        return pattern_symmetric(full, rc.pattern["n_rings"],
                                 rc.pattern["n_per_ring"])
    if kind == "pseudorandom":
        return pattern_pseudorandom(full, rc.pattern["count"],
                                    rc.pattern.get("seed", rc.seed))
    raise ValueError(f"unknown illumination pattern kind {kind!r}")


def _phantom_volume(rc: RunConfig, grid: FrequencyGrid,
                    cfg: OpticalConfig) -> PermittivityVolume:
    if rc.phantom is None:
        raise ValueError("config has no 'phantom' section")
    spec = PhantomSpec(rc.phantom["kind"], dict(rc.phantom.get("params", {})))
    return make_phantom(spec, grid, cfg)


def _recon_params(rc: RunConfig) -> ReconParams:
    if rc.recon is None:
        raise ValueError("config has no 'recon' section")
    return ReconParams.from_dict(rc.recon)


def _simulate_images(rc: RunConfig, vol: PermittivityVolume,
                     illum: IlluminationSet, pupil: Pupil, grid: FrequencyGrid,
                     cfg: OpticalConfig, threads: int) -> IntensityDataset:
    """Run the configured forward model, one worker per LED.

    Each LED's image is computed by an independent single-LED run, so the
    result is bitwise identical for any thread count.
    """
    def run(subset: IlluminationSet) -> IntensityDataset:
        if rc.model == "multislice":
            return simulate_intensity_multislice(
                vol, subset, pupil, grid, cfg, edge_taper_px=rc.edge_taper_px)
        return simulate_intensity_born(
            vol, subset, pupil, grid, cfg, keep_ss=(rc.model == "born_full"))

    if threads <= 1 or len(illum) == 1:
        return run(illum)
    singles = [IlluminationSet([led], {"kind": "worker"}) for led in illum.leds]
    with ThreadPoolExecutor(max_workers=threads) as pool:
        parts = list(pool.map(run, singles))
    images = np.stack([p.images[0] for p in parts])
    background = np.array([p.background[0] for p in parts])
    return IntensityDataset(images, illum, cfg, background=background,
                            provenance=parts[0].provenance)


def cmd_phantom(rc: RunConfig, out: Path) -> dict:
    cfg = _optics(rc)
    grid = FrequencyGrid(cfg)
    vol = _phantom_volume(rc, grid, cfg)
    path = write_volume(vol, out / "phantom")
    return {"command": "phantom", "out": str(path), "shape": list(vol.shape),
            "slice_z": [float(z) for z in vol.slice_z]}


def cmd_simulate(rc: RunConfig, out: Path, threads: int) -> dict:
    cfg = _optics(rc)
    grid = FrequencyGrid(cfg)
    pupil = Pupil(cfg)
    illum = build_illumination(rc, cfg)
    vol = _phantom_volume(rc, grid, cfg)
    ds = _simulate_images(rc, vol, illum, pupil, grid, cfg, threads)
    if rc.noise_std > 0.0:
        ds = add_noise(ds, rc.noise_std, seed=rc.seed)
    path = write_dataset(ds, out / "dataset")
    return {"command": "simulate", "out": str(path), "model": rc.model,
            "n_leds": len(ds), "shape": list(ds.images.shape),
            "noise_std": rc.noise_std}


def _negated_bins(h: np.ndarray) -> np.ndarray:
    """h evaluated at -u on the unshifted FFT grid."""
    ny, nx = h.shape
    return h[np.ix_((-np.arange(ny)) % ny, (-np.arange(nx)) % nx)]


def anti_symmetry_residual(h_re: np.ndarray, h_im: np.ndarray) -> float:
    """How far the phase TF is from odd in u, relative to the pair.

    At focus the phase TF satisfies H_re(-u) = -H_re(u) exactly; the
    residual is normalized by the larger of the two slab magnitudes so the
    on-axis in-focus case (H_re identically zero) reports 0, not 0/0.
    """
    num = float(np.max(np.abs(h_re + _negated_bins(h_re))))
    scale = max(float(np.max(np.abs(h_re))), float(np.max(np.abs(h_im))))
    return num / scale if scale > 0.0 else 0.0


def cmd_tf(rc: RunConfig, out: Path, led_index: int, slice_index: int) -> dict:
    cfg = _optics(rc)
    grid = FrequencyGrid(cfg)
    pupil = Pupil(cfg)
    illum = build_illumination(rc, cfg)
    params = _recon_params(rc)
    if not (0 <= led_index < len(illum)):
        raise ValueError(f"--led {led_index} outside 0..{len(illum) - 1}")
    if not (0 <= slice_index < params.slice_z.size):
        raise ValueError(
            f"--slice {slice_index} outside 0..{params.slice_z.size - 1}")
    led = illum.leds[led_index]
    z = float(params.slice_z[slice_index])
    h_re, h_im = compute_tf_slice((led.ux, led.uy), led.eta, z, pupil, grid,
                                  cfg, source_intensity=led.s)
    tfdir = out / "tf"
    tfdir.mkdir(parents=True, exist_ok=True)
    tag = f"l{led_index:04}_m{slice_index:03}"
    files = {}
    for name, h in (("re", h_re), ("im", h_im)):
        base = tfdir / f"tf_{name}_{tag}"
        export_tf_slab(h, base, led_index, slice_index, z, led.ux, led.uy)
        lo, hi = write_preview(np.fft.fftshift(np.abs(h)),
                               tfdir / f"tf_{name}_{tag}.png", bits=8)
        files[name] = {"bin": str(base) + ".bin", "png_min": lo, "png_max": hi}
    return {"command": "tf", "out": str(tfdir), "led": led_index,
            "slice": slice_index, "z": z,
            "anti_symmetry": anti_symmetry_residual(h_re, h_im),
            "files": files}


def cmd_reconstruct(rc: RunConfig, out: Path) -> dict:
    src = Path(rc.dataset) if rc.dataset else out / "dataset"
    ds = read_dataset(src)
    cfg = ds.cfg
    grid = FrequencyGrid(cfg)
    pupil = Pupil(cfg)
    params = _recon_params(rc)
    recon = reconstruct(ds, ds.illum, pupil, grid, cfg, params)
    path = write_recon(recon, out / "recon", cfg=cfg, params=params)
    return {"command": "reconstruct", "out": str(path),
            "dataset": str(src), "n_slices": recon.n_slices,
            "n_leds": len(ds)}


def _truth_volume(rc: RunConfig, out: Path) -> PermittivityVolume | None:
    report = rc.report or {}
    if "truth" in report:
        return read_volume(report["truth"])
    if (out / "phantom" / "manifest.json").exists():
        return read_volume(out / "phantom")
    return None


def cmd_report(rc: RunConfig, out: Path) -> dict:
    recon = read_recon(out / "recon")
    recon_manifest = json.loads((out / "recon" / "manifest.json").read_text())
    report_cfg = rc.report or {}
    cfg = _optics(rc)
    grid = FrequencyGrid(cfg)
    truth = _truth_volume(rc, out)

    metrics: dict = {
        "command": "report",
        "n_slices": recon.n_slices,
        "rms_phase": [float(np.sqrt(np.mean(s ** 2))) for s in recon.phase],
        "rms_absorption": [float(np.sqrt(np.mean(s ** 2)))
                           for s in recon.absorption],
    }

    if truth is not None and truth.n_slices == recon.n_slices:
        metrics["correlation_phase"] = [
            in_band_correlation(recon.phase[m], truth.eps_re[m], grid)
            for m in range(recon.n_slices)]
        metrics["correlation_absorption"] = [
            in_band_correlation(recon.absorption[m], truth.eps_im[m], grid)
            for m in range(recon.n_slices)]
        metrics["nrmse_phase"] = [
            band_nrmse(recon.phase[m], truth.eps_re[m], grid)
            for m in range(recon.n_slices)]
        metrics["nrmse_absorption"] = [
            band_nrmse(recon.absorption[m], truth.eps_im[m], grid)
            for m in range(recon.n_slices)]

    periods = report_cfg.get("periods_um", [])
    if periods and truth is not None:
        m = int(report_cfg.get("slice", 0))
        axis = report_cfg.get("axis", "x")
        metrics["modulation_depth"] = {
            str(p): modulation_depth(recon.phase[m], truth.eps_re[m], p, cfg,
                                     axis=axis)
            for p in periods}

    height_cfg = report_cfg.get("height")
    if height_cfg is not None:
        params = recon_manifest.get("params") or {}
        dz = float(height_cfg.get("dz", params.get("dz", 0.0)))
        if dz <= 0.0:
            raise ValueError("height metric needs a positive slice thickness")
        m = int(height_cfg.get("slice", 0))
        hmap = height_map(recon, m, float(height_cfg["n_ph"]), dz)
        axis = height_cfg.get("axis", "x")
        profile = hmap.mean(axis=0) if axis == "x" else hmap.mean(axis=1)
        entry = {"slice": m, "axis": axis,
                 "cutline_um": [float(v) for v in profile]}
        if "period_um" in height_cfg:
            entry["estimate_um"] = bar_height_estimate(
                hmap, float(height_cfg["period_um"]),
                int(height_cfg.get("n_bars", 3)), cfg, axis=axis)
        metrics["height"] = entry

    (out / "report.json").write_text(
        json.dumps(metrics, indent=2, sort_keys=True) + "\n")
    return metrics


def _resolve_threads(args, rc: RunConfig) -> int:
    flag = getattr(args, "threads", None)
    if flag is not None:
        return max(1, flag)
    env = os.environ.get("IDT_DEFAULT_THREADS")
    if env is not None:
        return max(1, int(env))
    if rc.threads is not None:
        return max(1, rc.threads)
    return os.cpu_count() or 1


def _common_flags() -> argparse.ArgumentParser:
    # shared by the root parser and every subcommand so the flags work in
    # either position; SUPPRESS keeps the subcommand parse from clobbering
    # values given before the subcommand name
    common = argparse.ArgumentParser(add_help=False,
                                     argument_default=argparse.SUPPRESS)
    common.add_argument("--config", type=Path, help="JSON run configuration")
    common.add_argument("--seed", type=int, help="override the config seed")
    common.add_argument("--threads", type=int,
                        help="worker bound (default: IDT_DEFAULT_THREADS or cores)")
    common.add_argument("--out", type=Path, help="output directory")
    return common


def build_parser() -> argparse.ArgumentParser:
    common = _common_flags()
    ap = argparse.ArgumentParser(
        prog="idtomo",
        description="slice-wise intensity diffraction tomography",
        parents=[common])
    sub = ap.add_subparsers(dest="command", required=True)
    sub.add_parser("phantom", parents=[common],
                   help="write the phantom volume container")
    sub.add_parser("simulate", parents=[common],
                   help="simulate the intensity dataset")
    tf = sub.add_parser("tf", parents=[common],
                        help="export one transfer-function slab")
    tf.add_argument("--led", type=int, default=0, help="LED index")
    tf.add_argument("--slice", type=int, default=0, dest="slice_index",
                    help="slice index into recon slice_z")
    sub.add_parser("reconstruct", parents=[common],
                   help="reconstruct from the dataset")
    sub.add_parser("report", parents=[common],
                   help="compute metrics against the truth volume")
    return ap


def run(args) -> dict:
    config = getattr(args, "config", None)
    seed = getattr(args, "seed", None)
    out_flag = getattr(args, "out", None)
    rc = load_config(config) if config else RunConfig()
    if seed is not None:
        rc.seed = seed
    out = Path(out_flag) if out_flag else Path(rc.out)
    out.mkdir(parents=True, exist_ok=True)
    threads = _resolve_threads(args, rc)
    if args.command == "phantom":
        return cmd_phantom(rc, out)
    if args.command == "simulate":
        return cmd_simulate(rc, out, threads)
    if args.command == "tf":
        return cmd_tf(rc, out, args.led, args.slice_index)
    if args.command == "reconstruct":
        return cmd_reconstruct(rc, out)
    if args.command == "report":
        return cmd_report(rc, out)
    raise ValueError(f"unknown command {args.command!r}")


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        result = run(args)
    except Exception as exc:  # error record to stderr, nonzero exit
        record = {"error": type(exc).__name__, "message": str(exc)}
        print(json.dumps(record), file=sys.stderr)
        return 1
    print(json.dumps(result, indent=2, sort_keys=True))
    return 0


if __name__ == "__main__":
    sys.exit(main())
