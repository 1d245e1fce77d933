"""
Statistics Routes - Thin API handlers
All estimation is delegated to app.core.stats
"""

from fastapi import APIRouter, HTTPException, Query
import logging

import numpy as np

from app.api.models import (
    DistributionResponse,
    IntervalRequest,
    IntervalResponse,
    IqmResponse,
    SamplesRequest
)
from app.core.exceptions import ToolkitError
from app.core.stats import Interval, interval, iqm, perf_distribution, t_multiplier

logger = logging.getLogger(__name__)

router = APIRouter()


def interval_response(iv: Interval) -> IntervalResponse:
    return IntervalResponse(
        lower=iv.lower,
        upper=iv.upper,
        kind=iv.kind,
        method=iv.method,
        alpha=iv.alpha,
        beta=iv.beta,
        n_samples=iv.n_samples,
        center=iv.center
    )


@router.post("/stats/interval", response_model=IntervalResponse)
async def interval_endpoint(request: IntervalRequest):
    """
    Interval estimate for the mean (or a tolerance interval)

    **Methods:**
    - `t`: Student-t confidence interval
    - `bootstrap`: percentile bootstrap over resampled means
    - `bernstein`: empirical Bernstein bound, needs `value_range`
    - `tolerance`: distribution-free interval holding `beta` of runs
    """
    try:
        logger.info(f"Interval request: method={request.method.value}, n={len(request.samples)}")
        iv = interval(
            request.samples,
            method=request.method.value,
            alpha=request.alpha,
            beta=request.beta,
            m=request.resamples,
            rng=np.random.default_rng(request.seed),
            value_range=tuple(request.value_range) if request.value_range else None
        )
        return interval_response(iv)

    except ToolkitError as e:
        logger.warning(f"Rejected interval request: {e}")
        raise HTTPException(status_code=422, detail=str(e))
    except Exception as e:
        logger.error(f"Error computing interval: {e}", exc_info=True)
        raise HTTPException(
            status_code=500,
            detail=f"Failed to compute interval: {str(e)}"
        )


@router.post("/stats/iqm", response_model=IqmResponse)
async def iqm_endpoint(request: SamplesRequest):
    """Interquartile mean, a summary robust to outlier runs"""
    try:
        return IqmResponse(
            iqm=iqm(request.samples),
            mean=float(np.mean(request.samples)),
            n_samples=len(request.samples)
        )
    except ToolkitError as e:
        raise HTTPException(status_code=422, detail=str(e))
    except Exception as e:
        logger.error(f"Error computing IQM: {e}", exc_info=True)
        raise HTTPException(status_code=500, detail=f"Failed to compute IQM: {str(e)}")


@router.post("/stats/distribution", response_model=DistributionResponse)
async def distribution_endpoint(request: SamplesRequest):
    """
    Histogram and kernel density of a performance sample

    `multimodal` is true when the density has two or more prominent peaks.
    """
    try:
        dist = perf_distribution(request.samples)
        return DistributionResponse(
            bin_edges=dist.bin_edges.tolist(),
            masses=dist.masses.tolist(),
            grid=dist.grid.tolist(),
            density=dist.density.tolist(),
            modes=dist.modes.tolist(),
            multimodal=dist.multimodal
        )
    except ToolkitError as e:
        raise HTTPException(status_code=422, detail=str(e))
    except Exception as e:
        logger.error(f"Error computing distribution: {e}", exc_info=True)
        raise HTTPException(status_code=500, detail=f"Failed to compute distribution: {str(e)}")


@router.get("/stats/t-multiplier")
async def t_multiplier_endpoint(
    n: int = Query(..., ge=2, description="Number of runs"),
    alpha: float = Query(0.05, gt=0.0, lt=1.0)
):
    """Two-sided Student-t multiplier t(1 - alpha/2, n - 1)"""
    try:
        return {"n": n, "alpha": alpha, "multiplier": t_multiplier(alpha, n)}
    except ToolkitError as e:
        raise HTTPException(status_code=422, detail=str(e))
