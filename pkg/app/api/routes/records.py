"""
Record Routes - read-only access to stored run batches
"""

from typing import List

from fastapi import APIRouter, Depends, HTTPException, Query
import logging

import numpy as np

from app.api.main import get_record_store
from app.api.models import RecordSummary
from app.core.exceptions import ToolkitError
from app.core.metrics import batch_metric
from app.services.storage import BaseRecordStore

logger = logging.getLogger(__name__)

router = APIRouter()


def _load_or_404(store: BaseRecordStore, key: str):
    """Get batch from storage or raise 404"""
    try:
        return store.load(key)
    except KeyError:
        raise HTTPException(
            status_code=404,
            detail=f"Record batch {key} not found"
        )


@router.get("/records", response_model=List[str])
async def list_records(
    pattern: str = Query("*", description="Shell-style key pattern"),
    store: BaseRecordStore = Depends(get_record_store)
):
    """List stored batch keys"""
    return store.keys(pattern)


@router.get("/records/{key}", response_model=RecordSummary)
async def record_summary(key: str, store: BaseRecordStore = Depends(get_record_store)):
    """Summary of one stored batch"""
    batch = _load_or_404(store, key)
    try:
        samples = batch_metric(batch.records, "return_rate")
        return RecordSummary(
            key=key,
            fingerprint=batch.fingerprint,
            env=batch.env_id,
            algorithm=batch.algorithm,
            runs=len(batch),
            step_budget=batch.step_budget,
            mean_return_rate=float(np.mean(samples.values))
        )
    except ToolkitError as e:
        raise HTTPException(status_code=422, detail=str(e))
    except Exception as e:
        logger.error(f"Error summarizing batch {key}: {e}", exc_info=True)
        raise HTTPException(status_code=500, detail=f"Failed to summarize batch: {str(e)}")


@router.get("/records/{key}/metric")
async def record_metric(
    key: str,
    metric: str = Query("return_rate"),
    store: BaseRecordStore = Depends(get_record_store)
):
    """Per-run values of one metric"""
    batch = _load_or_404(store, key)
    try:
        samples = batch_metric(batch.records, metric)
        return {"key": key, "metric": metric, "values": samples.values.tolist()}
    except ToolkitError as e:
        raise HTTPException(status_code=422, detail=str(e))
    except Exception as e:
        logger.error(f"Error computing {metric} for batch {key}: {e}", exc_info=True)
        raise HTTPException(status_code=500, detail=f"Failed to compute metric: {str(e)}")
