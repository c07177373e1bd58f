"""Matched-filter energy detector for active spreading sequences."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

__all__ = ["DetectedSet", "sequence_statistics", "detect_active"]


@dataclass
class DetectedSet:
    indices: np.ndarray     # 0-based columns, by descending statistic
    statistics: np.ndarray  # statistic of every column


def sequence_statistics(Y: np.ndarray, A: np.ndarray) -> np.ndarray:
    """``nu_j = ||a_j^T Y||^2`` for every column of ``A``."""
    proj = A.T @ Y
    return np.einsum("ji,ji->j", proj, proj)


def detect_active(Y: np.ndarray, A: np.ndarray, k: int) -> DetectedSet:
    """Top-``k`` columns by matched-filter energy; ties go to the lower index."""
    if k < 1:
        raise ValueError(f"k must be >= 1, got {k}")
    if k > A.shape[1]:
        raise ValueError(f"k = {k} exceeds dictionary size {A.shape[1]}")
    stats = sequence_statistics(Y, A)
    order = np.argsort(-stats, kind="stable")
    return DetectedSet(order[:k], stats)
