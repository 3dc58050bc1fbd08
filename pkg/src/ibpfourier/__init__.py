"""Oscillatory Fourier integrals of Coulomb-type kernels by integration by parts."""
from .series_core import (DecayCertificate, IdenticallyZeroTail, SeriesAtInfinity, decay_order_from_series,
                          differentiate_series, expand_coulomb1d, newton_binomial_coeff)
from .kernels import (DensityGrid, DensityInputError, DomainError, Fiber1D, KernelFunction, SlicedKernel,
                      ZeroWaveNumberError, bump_density, expand_fiber_at_infinity, fiber, kernel_from_descriptor,
                      load_density, write_density)
from .normality import (NormalityCertificate, ProbeConfig, ZeroLocusReport, certify, count_zeros_numeric,
                        decay_fit, zero_locus_closed_form)
from .osc_quad import (QuadConfig, TransformResult, fourier_integral_1d, ibp_lift, line_transforms, tail_bound,
                       truncated_line_integrals)
from .iterated import (IteratedConfig, IteratedTransformReport, double_limit_table, full_transform_2d,
                       full_transform_3d, moore_osgood_monitor, partial_transform_2d, partial_transforms_3d,
                       truncation_scaling_3d)
from .harness import (HarnessConfig, OracleValue, VerificationReport, emit_plot_data,
                      oracle_transform_bruteforce, verify_lemma)

__version__ = "0.1.0"
