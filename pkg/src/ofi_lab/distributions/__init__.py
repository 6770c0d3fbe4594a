"""Bessel K, GIG, GH and stable-law numerics."""

from .bessel import bessel_k, bessel_k_ratio, bessel_kve, log_bessel_k
from .gh import GhParams, gh_cdf, gh_mean, gh_pdf, gh_sample, gh_var
from .gig import (
    GigParams,
    gig_cdf,
    gig_logpdf,
    gig_mean,
    gig_mode,
    gig_moment,
    gig_pdf,
    gig_sample,
    gig_var,
)
from .normal import normal_cdf, normal_pdf
from .stable import StableParams, levy_cdf, stable_cf, stable_mixture_sample, stable_sample

__all__ = [
    "GhParams",
    "GigParams",
    "StableParams",
    "bessel_k",
    "bessel_k_ratio",
    "bessel_kve",
    "gh_cdf",
    "gh_mean",
    "gh_pdf",
    "gh_sample",
    "gh_var",
    "gig_cdf",
    "gig_logpdf",
    "gig_mean",
    "gig_mode",
    "gig_moment",
    "gig_pdf",
    "gig_sample",
    "gig_var",
    "levy_cdf",
    "log_bessel_k",
    "normal_cdf",
    "normal_pdf",
    "stable_cf",
    "stable_mixture_sample",
    "stable_sample",
]
