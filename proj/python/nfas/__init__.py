"""Python bindings for the nfas toolkit.

Arrays follow the C++ shapes: trajectories are [L, D], features [T, D],
brain time series [R, T], alignment matrices [M, R].
"""

from ._core import (
    DegeneracyError,
    Error,
    FormatError,
    HrfParams,
    IoError,
    ValidationError,
    alignment_vector,
    analyze_trajectory,
    canonical_hrf,
    convolve_hrf,
    cosine_distances,
    cv_alignment_score,
    fit_ridge,
    hrf_kernel,
    make_workspace,
    pca,
    permanova,
    read_tensor,
    run_pipeline,
    silhouette,
    snci,
    trajectory_to_z,
    two_way_anova,
    write_tensor,
    zscore,
)

__all__ = [name for name in dir() if not name.startswith("_")]
