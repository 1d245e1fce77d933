"""
Hyperparameter Study Routes - Thin API handlers
Tuned-performance estimates and sweep sanity checks from app.core.hyperstudy
"""

from fastapi import APIRouter, HTTPException
import logging

import numpy as np

from app.api.models import (
    FairSetRequest,
    FairSetResponse,
    MaxEstimateResponse,
    OverreportRequest,
    OverreportResponse,
    PerConfigRequest,
    SensitivityResponse,
    SensitivityRow
)
from app.api.routes.stats import interval_response
from app.core.exceptions import ToolkitError
from app.core.hyperstudy import (
    bootstrap_max_estimate,
    closed_form_overreport_probability,
    fair_set_check,
    maximization_bias_probability,
    sensitivity
)

logger = logging.getLogger(__name__)

router = APIRouter()


@router.post("/hyper/bootstrap-max", response_model=MaxEstimateResponse)
async def bootstrap_max_endpoint(request: PerConfigRequest):
    """
    Idealized tuned performance with uncertainty

    Resamples each configuration's runs, takes the best mean per resample
    and summarizes the maxima. `winner_counts` counts how often each
    configuration was the best.
    """
    try:
        logger.info(f"Bootstrap-max over {len(request.configs)} configs, m={request.resamples}")
        estimate = bootstrap_max_estimate(
            request.configs,
            m=request.resamples,
            rng=np.random.default_rng(request.seed),
            alpha=request.alpha
        )
        return MaxEstimateResponse(
            mean=estimate.mean,
            interval=interval_response(estimate.interval),
            winner_counts=estimate.winner_counts.tolist()
        )

    except ToolkitError as e:
        raise HTTPException(status_code=422, detail=str(e))
    except Exception as e:
        logger.error(f"Error estimating tuned performance: {e}", exc_info=True)
        raise HTTPException(
            status_code=500,
            detail=f"Failed to estimate tuned performance: {str(e)}"
        )


@router.post("/hyper/sensitivity", response_model=SensitivityResponse)
async def sensitivity_endpoint(request: PerConfigRequest):
    """Sensitivity curve; `boundary_flag` means the best value sits at the edge of the range"""
    try:
        values = request.values if request.values is not None else list(range(len(request.configs)))
        result = sensitivity(
            values,
            request.configs,
            alpha=request.alpha,
            m=request.resamples,
            rng=np.random.default_rng(request.seed)
        )
        return SensitivityResponse(
            rows=[SensitivityRow(**row) for row in result.rows()],
            best_index=result.best_index,
            boundary_flag=result.boundary_flag
        )

    except ToolkitError as e:
        raise HTTPException(status_code=422, detail=str(e))
    except Exception as e:
        logger.error(f"Error computing sensitivity: {e}", exc_info=True)
        raise HTTPException(status_code=500, detail=f"Failed to compute sensitivity: {str(e)}")


@router.post("/hyper/fair-set", response_model=FairSetResponse)
async def fair_set_endpoint(request: FairSetRequest):
    """Check that every algorithm was tuned over the same number of configurations"""
    try:
        report = fair_set_check(request.config_counts)
        return FairSetResponse(ok=report.ok, reference_count=report.reference_count,
                               violators=report.violators)
    except ToolkitError as e:
        raise HTTPException(status_code=422, detail=str(e))


@router.post("/hyper/overreport", response_model=OverreportResponse)
async def overreport_endpoint(request: OverreportRequest):
    """
    Simulated probability that the best of H equal configurations over-reports

    Returned next to the closed form 1 - 0.5^H for comparison.
    """
    try:
        fraction = maximization_bias_probability(
            request.H, request.N, trials=request.trials, rng=np.random.default_rng(request.seed))
        return OverreportResponse(fraction=fraction,
                                  closed_form=closed_form_overreport_probability(request.H))
    except ToolkitError as e:
        raise HTTPException(status_code=422, detail=str(e))
    except Exception as e:
        logger.error(f"Error simulating over-report probability: {e}", exc_info=True)
        raise HTTPException(status_code=500, detail=f"Failed to simulate: {str(e)}")
