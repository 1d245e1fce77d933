"""
FastAPI Application - Thin API Layer
All statistics live in the core layer; this exposes them over HTTP
"""

from fastapi import FastAPI, HTTPException
from fastapi.middleware.cors import CORSMiddleware
from contextlib import asynccontextmanager
import logging

from app.config import config
from app.services.storage import RecordStoreFactory

# Setup logging
logging.basicConfig(level=config.LOG_LEVEL, format=config.LOG_FORMAT)
logger = logging.getLogger(__name__)

# Global instances (initialized in lifespan)
record_store = None


@asynccontextmanager
async def lifespan(app: FastAPI):
    """
    Application lifespan manager

    Validates configuration and opens the record store on startup
    """
    global record_store

    # Startup
    logger.info(f"Starting {config.APP_NAME} v{config.APP_VERSION}")
    logger.info(f"Environment: {config.ENVIRONMENT}")

    try:
        config.validate()

        storage_config = config.get_storage_config()
        record_store = RecordStoreFactory.create_store(config.STORAGE_TYPE, storage_config)
        logger.info(
            f"Record store: {config.STORAGE_TYPE} {storage_config.get('root', '')} "
            f"({len(record_store.keys())} batches)"
        )

    except Exception as e:
        logger.error(f"Failed to start application: {e}")
        raise

    yield

    # Shutdown
    record_store = None
    logger.info("Record store closed")


# Create FastAPI app
app = FastAPI(
    title=config.APP_NAME,
    version=config.APP_VERSION,
    description="Interval estimates, comparisons and hyperparameter-study statistics "
    "for reinforcement-learning experiments",
    lifespan=lifespan)

# Add CORS middleware
app.add_middleware(
    CORSMiddleware,
    allow_origins=config.CORS_ORIGINS,
    allow_credentials=True,
    allow_methods=["*"],
    allow_headers=["*"],
)


def get_record_store():
    """Dependency: Get record store instance"""
    if record_store is None:
        raise HTTPException(status_code=503, detail="Record store not initialized")
    return record_store


# Root endpoints
@app.get("/")
async def root():
    """API root - health check and info"""
    return {
        "name": config.APP_NAME,
        "version": config.APP_VERSION,
        "status": "healthy",
        "environment": config.ENVIRONMENT,
        "endpoints": {
            "health": "/health",
            "docs": "/docs",
            "interval": "/api/v1/stats/interval",
            "compare": "/api/v1/compare/paired",
            "bootstrap_max": "/api/v1/hyper/bootstrap-max",
            "records": "/api/v1/records"
        }
    }


@app.get("/health")
async def health_check():
    """Liveness plus the settings that change statistical output"""
    return {
        "status": "healthy",
        "services": {
            "record_store": record_store is not None,
            "record_batches": len(record_store.keys()) if record_store is not None else 0
        },
        "config": {
            "storage_type": config.STORAGE_TYPE,
            "bootstrap_resamples": config.BOOTSTRAP_RESAMPLES,
            "environment": config.ENVIRONMENT
        }
    }


# Import and register route blueprints
from app.api.routes import compare, hyper, records, stats

app.include_router(stats.router, prefix="/api/v1", tags=["Statistics"])
app.include_router(compare.router, prefix="/api/v1", tags=["Comparison"])
app.include_router(hyper.router, prefix="/api/v1", tags=["Hyperparameters"])
app.include_router(records.router, prefix="/api/v1", tags=["Records"])

if __name__ == "__main__":
    import uvicorn

    uvicorn.run("app.api.main:app",
                host=config.HOST,
                port=config.PORT,
                reload=config.RELOAD,
                log_level=config.LOG_LEVEL.lower())
