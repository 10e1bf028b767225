"""Bayesian spatial item factor analysis for binary geo-referenced surveys.

Thin python surface over the C++ core: build a :class:`Dataset` from numpy
arrays (NaN marks missing responses), parse a model configuration, run the
Metropolis-within-Gibbs sampler, and post-process chains with ``rescale``,
``dic``, ``predict`` and ``variogram``.
"""

try:
    from ._geofactor import (  # type: ignore[attr-defined]
        ChainOutput,
        Dataset,
        ModelSpec,
        NumericalError,
        SamplerConfig,
        ValidationError,
        __version__,
        cpc_transform,
        dic,
        exp_correlation,
        fit,
        parse_config_text,
        predict,
        rescale,
        standardize,
        variogram,
    )
except ImportError:  # development tree: extension on PYTHONPATH
    from _geofactor import (  # type: ignore[no-redef]
        ChainOutput,
        Dataset,
        ModelSpec,
        NumericalError,
        SamplerConfig,
        ValidationError,
        __version__,
        cpc_transform,
        dic,
        exp_correlation,
        fit,
        parse_config_text,
        predict,
        rescale,
        standardize,
        variogram,
    )

__all__ = [
    "ChainOutput",
    "Dataset",
    "ModelSpec",
    "NumericalError",
    "SamplerConfig",
    "ValidationError",
    "__version__",
    "cpc_transform",
    "dic",
    "exp_correlation",
    "fit",
    "parse_config_text",
    "predict",
    "rescale",
    "standardize",
    "variogram",
]
