"""Binomial confidence intervals"""

from typing import Tuple

import numpy as np
from scipy.stats import norm


def wilson_interval(successes: int, trials: int, confidence: float = 0.95) -> Tuple[float, float]:
    """Wilson score interval; (nan, nan) when there are no trials"""
    if trials <= 0:
        return float("nan"), float("nan")
    z = norm.ppf(0.5 + confidence / 2.0)
    phat = successes / trials
    denom = 1.0 + z * z / trials
    center = (phat + z * z / (2.0 * trials)) / denom
    half = z * np.sqrt(phat * (1.0 - phat) / trials + z * z / (4.0 * trials * trials)) / denom
    return float(max(0.0, center - half)), float(min(1.0, center + half))
