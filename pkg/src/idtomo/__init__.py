"""Slice-wise intensity diffraction tomography.

Simulates angled-illumination intensity images of a 3D complex
permittivity volume (first-Born and multislice models) and reconstructs
phase and absorption slice stacks from intensity-only data through a
closed-form slice-wise Tikhonov deconvolution.
"""

from ._backend import BACKEND, HAVE_EXT
from .containers import (
    export_tf_slab,
    read_dataset,
    read_recon,
    read_tf_slab,
    read_volume,
    write_dataset,
    write_recon,
    write_volume,
)
from .forward import (
    IntensityDataset,
    PermittivityVolume,
    add_noise,
    angular_spectrum_propagate,
    born_scattered_field,
    simulate_intensity_born,
    simulate_intensity_linear,
    simulate_intensity_multislice,
)
from .leds import (
    IlluminationSet,
    Led,
    LedArray,
    led_to_frequency,
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
from .phantom import (
    PhantomSpec,
    helix_center,
    make_bar_target,
    make_beads,
    make_helix,
    make_phantom,
    make_two_layer_target,
    make_uniform_slab,
)
from .recon import (
    Accumulators,
    ReconParams,
    ReconstructionVolume,
    SlabCounter,
    accumulate,
    height_map,
    normalize_dataset,
    reconstruct,
    solve_tikhonov,
)
from .transfer import (
    BackgroundIntensity,
    TransferFunctionStack,
    background_intensity,
    band_support,
    compute_tf_slice,
    compute_tf_stack,
    normalize_tf,
)

__version__ = "0.1.0"
