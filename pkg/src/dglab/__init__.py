"""Spectral toolbox for one-dimensional vorticity models on the circle."""

__version__ = "0.1.0"

from .spectral import (
    AliasingError,
    GridSamples,
    MeanZero,
    PointZero,
    RealCircleField,
    biot_savart,
    circle_field,
    derivative,
    evaluate,
    field_from_coeffs,
    from_samples,
    hilbert,
    mean_value,
    project_p0,
    quotient_y0_norm,
    sobolev_norm,
    to_samples,
    y0_norm,
    zero_field,
)
