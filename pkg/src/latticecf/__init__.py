"""Nested-lattice Wyner-Ziv coding and lattice compress-and-forward relaying."""
from .lattice import (
    CodebookError,
    DimensionError,
    Lattice,
    NestedPair,
    SearchBudgetExceeded,
    codeword_of_index,
    coset_index,
    make_nested_pair,
    mod_lattice,
    quantize_nearest,
    sample_dither,
    scale_to_second_moment,
    second_moment,
)
from .relay import CfConfig, simulate_cf
from .streams import DitherSource
from .wyner_ziv import WzConfig, mmse_coefficients, wz_decode, wz_encode, wz_simulate

__version__ = "0.1.0"
