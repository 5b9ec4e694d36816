"""Synthetic inverse problems shared by the experiments."""
from __future__ import annotations

import numpy as np

from ..function_space import BasisSpec
from ..measures import (GammaPriorSpec, GaussianPriorSpec, make_stream, sample_gamma_prior,
                        sample_gaussian_prior)
from ..potentials import (ConvolutionKernel, DeconvolutionPotential, ObservationData, SslPotential,
                          equispaced_points, synthesize_data)


def ssl_target(basis: BasisSpec, n_obs: int = 8, sigma: float = 1.0, h: float = 1.0, data_seed: int = 7,
               prior: str = "gamma", r: float = 0.5) -> tuple[SslPotential, np.ndarray]:
    """SSL potential with data generated from a prior draw; returns ``(potential, truth)``."""
    rng = make_stream(data_seed, "ssl-data")
    if prior == "gamma":
        truth = sample_gamma_prior(GammaPriorSpec(r, basis), rng)
    else:
        truth = sample_gaussian_prior(GaussianPriorSpec(basis), rng)
    pts = equispaced_points(n_obs)
    blank = SslPotential(ObservationData(pts, np.zeros(n_obs), sigma), basis, h)
    data = synthesize_data(blank.observe, truth, pts, sigma, rng)
    return SslPotential(data, basis, h), truth


def deconvolution_target(basis: BasisSpec, n_obs: int = 8, data_seed: int = 7,
                         r: float = 0.5) -> tuple[DeconvolutionPotential, np.ndarray]:
    """Deconvolution with unit observation noise, as in the quadratic potential (1/2)||G u - y||^2."""
    rng = make_stream(data_seed, "deconv-data")
    truth = sample_gamma_prior(GammaPriorSpec(r, basis), rng)
    pts = equispaced_points(n_obs)
    kernel = ConvolutionKernel()
    blank = DeconvolutionPotential(ObservationData(pts, np.zeros(n_obs)), kernel, basis)
    data = synthesize_data(blank.forward, truth, pts, 1.0, rng)
    return DeconvolutionPotential(data, kernel, basis), truth


def ssl_from_config(cfg, basis: BasisSpec, prior: str = "gamma"):
    p = cfg["potential"]
    r = cfg["kernel"].get("r", 0.5)
    return ssl_target(basis, p["n_obs"], p["sigma"], p["h"], p["data_seed"], prior, r)
