"""Metropolis-Hastings samplers with random autoregressive (RCAR) proposals on function space."""
from __future__ import annotations

from .couplings import (ContractionEstimate, DriftEstimate, basic_coupled_step, estimate_contraction,
                        estimate_drift, fit_drift, run_coupled_chain, smallset_probe)
from .function_space import BasisSpec, InvalidInputError, as_field, evaluate_at, h1_norm, project
from .measures import (CompoundPoissonSpec, GammaPriorSpec, GaussianPriorSpec, ParameterError, make_rng,
                       make_rngs)
from .metrics import (SemimetricParams, coupled_tilde_d_mean, d_s, expectation_gap, lyapunov_V, tilde_d_s,
                      weak_triangle_ratio)
from .mh import (ChainConfig, ChainError, ChainTrace, ProposalKernel, acceptance_prob, cesaro_average,
                 cp_kernel, gamma_rcar_kernel, pcn_kernel, rcar_step, run_chain, run_chains)
from .potentials import (ConvolutionKernel, DeconvolutionPotential, ObservationData, ProjectedPotential,
                         SslPotential, TailModifiedPotential, TailModParams)

__version__ = "0.1.0"
