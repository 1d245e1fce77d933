"""
Comparison Routes - Thin API handlers
Two-algorithm comparison on per-run scalar performance
"""

from fastapi import APIRouter, HTTPException
import logging

from app.api.models import CompareResponse, PairedRequest
from app.api.routes.stats import interval_response
from app.core.compare import bonferroni, paired_scalar_test, welch_ci
from app.core.exceptions import ToolkitError

logger = logging.getLogger(__name__)

router = APIRouter()


@router.post("/compare/paired", response_model=CompareResponse)
async def compare_endpoint(request: PairedRequest):
    """
    Interval on the mean difference A - B

    With `paired` the runs must share seeds index by index (equal lengths)
    and a paired t interval is used; otherwise Welch's interval.
    `k_comparisons` applies a Bonferroni correction to alpha.
    """
    try:
        effective_alpha = bonferroni(request.alpha, request.k_comparisons)
        if request.paired:
            iv = paired_scalar_test(request.samples_a, request.samples_b, effective_alpha)
        else:
            iv = welch_ci(request.samples_a, request.samples_b, effective_alpha)

        significant = not iv.contains(0.0)
        logger.info(
            f"Comparison: paired={request.paired}, effect={iv.center:.4g}, "
            f"significant={significant}, alpha={effective_alpha:.4g}"
        )
        return CompareResponse(
            interval=interval_response(iv),
            effect_size=iv.center,
            significant=significant,
            effective_alpha=effective_alpha
        )

    except ToolkitError as e:
        logger.warning(f"Rejected comparison: {e}")
        raise HTTPException(status_code=422, detail=str(e))
    except Exception as e:
        logger.error(f"Error comparing samples: {e}", exc_info=True)
        raise HTTPException(
            status_code=500,
            detail=f"Failed to compare samples: {str(e)}"
        )
