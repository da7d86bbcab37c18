"""LED-array geometry and illumination-pattern selection.

An LED at lattice position (p, q) on a planar board at height ``height_mm``
above the sample illuminates it with a plane wave whose transverse frequency
is u_i = k * (s_x, s_y), where s is the unit direction from the LED toward
the sample center. Units: board dimensions in mm, frequencies in rad/um.
"""

from __future__ import annotations

import json
from dataclasses import dataclass

import numpy as np

from .optics import OpticalConfig

__all__ = [
    "LedArray",
    "Led",
    "IlluminationSet",
    "led_to_frequency",
    "select_brightfield",
    "pattern_symmetric",
    "pattern_pseudorandom",
]


@dataclass(frozen=True)
class LedArray:
    """Planar LED board: square lattice of pitch ``pitch_mm`` at ``height_mm``.

    ``grid_extent`` is the half-width in lattice units: indices p, q run over
    [-grid_extent, grid_extent]. The default extent covers the brightfield
    region of an NA 0.65 objective on the 4 mm / 79 mm rig.
    """

    pitch_mm: float = 4.0
    height_mm: float = 79.0
    grid_extent: int = 17
    center_offset_mm: tuple[float, float] = (0.0, 0.0)

    def __post_init__(self):
        if self.pitch_mm <= 0:
            raise ValueError(f"pitch must be positive, got {self.pitch_mm}")
        if self.height_mm <= 0:
            raise ValueError(f"height must be positive, got {self.height_mm}")
        if self.grid_extent < 0:
            raise ValueError(f"grid extent must be >= 0, got {self.grid_extent}")

    def positions(self):
        """All (p, q) lattice indices, lexicographically ordered."""
        rng = range(-self.grid_extent, self.grid_extent + 1)
        return [(p, q) for p in rng for q in rng]

    def to_dict(self) -> dict:
        return {
            "pitch_mm": self.pitch_mm,
            "height_mm": self.height_mm,
            "grid_extent": self.grid_extent,
            "center_offset_mm": list(self.center_offset_mm),
        }

    @classmethod
    def from_dict(cls, d: dict) -> "LedArray":
        d = dict(d)
        if "center_offset_mm" in d:
            d["center_offset_mm"] = tuple(d["center_offset_mm"])
        return cls(**d)


@dataclass(frozen=True)
class Led:
    """One illumination direction: lattice index, frequencies, intensity."""

    p: int
    q: int
    ux: float  # rad/um
    uy: float  # rad/um
    eta: float  # axial frequency eta_i = sqrt(k^2 - |u_i|^2), rad/um
    s: float = 1.0  # source intensity S(u_i)


def led_to_frequency(p: int, q: int, array: LedArray,
                     cfg: OpticalConfig) -> tuple[float, float, float]:
    """Map an LED lattice index to (ux, uy, eta_i).

    The LED sits at (p*pitch + ox, q*pitch + oy, height); the unit direction
    toward the sample origin gives u_i = k*(s_x, s_y) and
    eta_i = sqrt(k^2 - |u_i|^2) > 0.
    """
    ox, oy = array.center_offset_mm
    x = p * array.pitch_mm + ox
    y = q * array.pitch_mm + oy
    d = array.height_mm
    norm = np.sqrt(x * x + y * y + d * d)
    k = cfg.k
    ux = k * x / norm
    uy = k * y / norm
    r2 = ux * ux + uy * uy
    if r2 >= k * k:
        raise ValueError(
            f"LED ({p},{q}) direction lies outside the propagating cone: "
            f"|u_i| = {np.sqrt(r2):.6g} >= k = {k:.6g} rad/um"
        )
    eta = np.sqrt(k * k - r2)
    return float(ux), float(uy), float(eta)


@dataclass
class IlluminationSet:
    """Ordered set of illumination directions used by one acquisition.

    ``pattern`` is a descriptor dict, e.g. {"kind": "full_brightfield"} or
    {"kind": "symmetric", "n_rings": 3, "n_per_ring": 12} or
    {"kind": "pseudorandom", "count": 36, "seed": 7}. Per-LED arrays returned
    by the properties are index-aligned with ``leds``.
    """

    leds: list[Led]
    pattern: dict
    seed: int | None = None

    def __post_init__(self):
        if len(self.leds) == 0:
            raise ValueError("illumination set must contain at least one LED")
        if any(l.s <= 0 for l in self.leds):
            raise ValueError("per-LED source intensity must be positive")

    def __len__(self) -> int:
        return len(self.leds)

    @property
    def u(self) -> np.ndarray:
        """(L, 2) array of transverse frequencies in rad/um."""
        return np.array([(l.ux, l.uy) for l in self.leds], dtype=np.float64)

    @property
    def eta(self) -> np.ndarray:
        return np.array([l.eta for l in self.leds], dtype=np.float64)

    @property
    def source_intensity(self) -> np.ndarray:
        return np.array([l.s for l in self.leds], dtype=np.float64)

    def with_intensity(self, s) -> "IlluminationSet":
        """Copy with per-LED source intensities replaced (scalar or length L)."""
        s = np.broadcast_to(np.asarray(s, dtype=np.float64), (len(self.leds),))
        leds = [
            Led(p=l.p, q=l.q, ux=l.ux, uy=l.uy, eta=l.eta, s=float(si))
            for l, si in zip(self.leds, s)
        ]
        return IlluminationSet(leds=leds, pattern=self.pattern, seed=self.seed)

    def to_json(self) -> str:
        """Serialize to the illumination manifest format (rad/um units)."""
        doc = {
            "pattern": self.pattern,
            "seed": self.seed,
            "frequency_units": "rad/um",
            "leds": [
                {"p": l.p, "q": l.q, "ux": l.ux, "uy": l.uy, "eta": l.eta, "s": l.s}
                for l in self.leds
            ],
        }
        return json.dumps(doc, indent=2, sort_keys=True)

    @classmethod
    def from_json(cls, text: str) -> "IlluminationSet":
        doc = json.loads(text)
        leds = [
            Led(p=e["p"], q=e["q"], ux=e["ux"], uy=e["uy"], eta=e["eta"],
                s=e.get("s", 1.0))
            for e in doc["leds"]
        ]
        return cls(leds=leds, pattern=doc["pattern"], seed=doc.get("seed"))


def select_brightfield(array: LedArray, cfg: OpticalConfig,
                       source_intensity: float = 1.0) -> IlluminationSet:
    """All LEDs with |u_i| <= NA*k0, ordered lexicographically by (p, q)."""
    cutoff = cfg.pupil_cutoff
    leds = []
    for p, q in array.positions():
        ux, uy, eta = led_to_frequency(p, q, array, cfg)
        if np.hypot(ux, uy) <= cutoff * (1.0 + 1e-12):
            leds.append(Led(p=p, q=q, ux=ux, uy=uy, eta=eta, s=source_intensity))
    if not leds:
        raise ValueError(
            f"no brightfield LEDs: NA*k0 = {cutoff:.6g} rad/um admits none on a "
            f"pitch {array.pitch_mm} mm board at height {array.height_mm} mm"
        )
    return IlluminationSet(leds=leds, pattern={"kind": "full_brightfield"})


def _require_full(full: IlluminationSet, op: str):
    if full.pattern.get("kind") != "full_brightfield":
        raise ValueError(f"{op} expects a full_brightfield set, got "
                         f"{full.pattern!r}")


def pattern_symmetric(full: IlluminationSet, n_rings: int,
                      n_per_ring: int) -> IlluminationSet:
    """Ring pattern: radial bins of |u_i| with azimuthally equispaced members.

    The brightfield radial range is divided into ``n_rings`` equal bins over
    (0, max cutoff]; in each bin, ``n_per_ring`` LEDs are chosen greedily as
    the nearest not-yet-chosen member to each of n_per_ring equally spaced
    azimuthal targets (ties broken by lowest (p, q)), so the selection is
    duplicate-free and the output size is exactly n_rings*n_per_ring. A LED
    exactly on axis (|u_i| = 0) belongs to no ring. Requesting exactly
    len(full) LEDs returns the full set unchanged apart from the descriptor.
    """
    _require_full(full, "pattern_symmetric")
    if n_rings < 1 or n_per_ring < 1:
        raise ValueError(
            f"n_rings and n_per_ring must be >= 1, got {n_rings}, {n_per_ring}"
        )
    descriptor = {"kind": "symmetric", "n_rings": n_rings, "n_per_ring": n_per_ring}
    if n_rings * n_per_ring == len(full):
        return IlluminationSet(leds=list(full.leds), pattern=descriptor)

    radii = np.hypot(*full.u.T)
    rmax = float(radii.max())
    edges = rmax * np.arange(n_rings + 1) / n_rings
    bins: list[list[Led]] = [[] for _ in range(n_rings)]
    for led, r in zip(full.leds, radii):
        if r == 0.0:
            continue
        j = min(int(np.searchsorted(edges, r, side="left")) - 1, n_rings - 1)
        bins[max(j, 0)].append(led)

    chosen: list[Led] = []
    for j, members in enumerate(bins):
        if n_per_ring > len(members):
            raise ValueError(
                f"ring {j + 1}/{n_rings} ({edges[j]:.4g}, {edges[j + 1]:.4g}] "
                f"rad/um holds {len(members)} LEDs, fewer than the requested "
                f"{n_per_ring}"
            )
        free = {(l.p, l.q): l for l in sorted(members, key=lambda l: (l.p, l.q))}
        for t in range(n_per_ring):
            target = 2.0 * np.pi * t / n_per_ring
            best_key = None
            best_pq = None
            for pq, led in free.items():
                ang = np.arctan2(led.uy, led.ux) % (2.0 * np.pi)
                dist = abs((ang - target + np.pi) % (2.0 * np.pi) - np.pi)
                key = (dist, led.p, led.q)
                if best_key is None or key < best_key:
                    best_key, best_pq = key, pq
            chosen.append(free.pop(best_pq))

    leds = sorted(chosen, key=lambda l: (l.p, l.q))
    return IlluminationSet(leds=leds, pattern=descriptor)


def _quadrant(ux: float, uy: float) -> int | None:
    """Quadrant of the u_i plane; boundary rays are assigned by a half-open
    rule (each axis ray belongs to exactly one quadrant, rotationally):
    Q0: ux > 0, uy >= 0; Q1: ux <= 0, uy > 0; Q2: ux < 0, uy <= 0;
    Q3: ux >= 0, uy < 0. The origin belongs to no quadrant."""
    if ux > 0 and uy >= 0:
        return 0
    if ux <= 0 and uy > 0:
        return 1
    if ux < 0 and uy <= 0:
        return 2
    if ux >= 0 and uy < 0:
        return 3
    return None


def pattern_pseudorandom(full: IlluminationSet, count: int,
                         seed: int) -> IlluminationSet:
    """Quadrant-balanced random subset: count/4 LEDs drawn per u_i quadrant.

    Brightfield LEDs are partitioned by :func:`_quadrant`; count/4 are drawn
    uniformly without replacement from each quadrant with a seeded generator.
    ``count`` must be divisible by 4. A LED exactly on axis belongs to no
    quadrant and is never drawn.
    """
    _require_full(full, "pattern_pseudorandom")
    if count % 4 != 0:
        raise ValueError(f"pseudorandom count must be divisible by 4, got {count}")
    if count < 4:
        raise ValueError(f"pseudorandom count must be >= 4, got {count}")
    quads: list[list[Led]] = [[], [], [], []]
    for led in full.leds:
        qd = _quadrant(led.ux, led.uy)
        if qd is not None:
            quads[qd].append(led)
    per = count // 4
    rng = np.random.default_rng(seed)
    chosen: list[Led] = []
    for qd, members in enumerate(quads):
        if per > len(members):
            raise ValueError(
                f"quadrant {qd} holds {len(members)} LEDs, fewer than the "
                f"requested {per}"
            )
        members = sorted(members, key=lambda l: (l.p, l.q))
        idx = rng.choice(len(members), size=per, replace=False)
        chosen.extend(members[i] for i in sorted(idx))
    leds = sorted(chosen, key=lambda l: (l.p, l.q))
    return IlluminationSet(
        leds=leds, pattern={"kind": "pseudorandom", "count": count, "seed": seed},
        seed=seed,
    )
