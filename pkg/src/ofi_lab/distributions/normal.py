"""Standard normal helpers (thin wrappers over scipy.special)."""

import numpy as np
from scipy import special


def normal_cdf(x, loc=0.0, scale=1.0):
    return special.ndtr((np.asarray(x, float) - loc) / scale)


def normal_pdf(x, loc=0.0, scale=1.0):
    z = (np.asarray(x, float) - loc) / scale
    return np.exp(-0.5 * z * z) / (np.sqrt(2.0 * np.pi) * scale)
