"""
FastAPI node application: contract and ledger endpoints for robots and the cloud
Reference: https://fastapi.tiangolo.com/tutorial/bigger-applications/
"""

from contextlib import asynccontextmanager

import structlog
import uvicorn
from fastapi import FastAPI

from app.api.node import get_node
from app.api.router import contract_router, ledger_router
from app.shared.config import settings
from app.shared.exceptions import BaseAppException, app_exception_handler
from app.shared.monitoring import configure_logging, start_metrics_server

logger = structlog.get_logger(__name__)


@asynccontextmanager
async def lifespan(app: FastAPI):
    """
    Application lifespan manager for startup and shutdown operations.

    Single Responsibility: Application lifecycle management
    """
    configure_logging()
    metrics = start_metrics_server()
    node = get_node()
    logger.info(
        "node_started",
        applied_seq=node.replica.applied_seq,
        n=node.contract.config.n,
        metrics_port=settings.metrics_port if metrics else None,
    )

    yield

    logger.info("node_stopped", applied_seq=node.replica.applied_seq)


# Create FastAPI application instance
app = FastAPI(
    title=settings.app_name,
    version=settings.version,
    lifespan=lifespan,
    docs_url="/api/docs" if settings.environment != "production" else None,
    redoc_url="/api/redoc" if settings.environment != "production" else None,
)

app.add_exception_handler(BaseAppException, app_exception_handler)

# Include routers
app.include_router(contract_router, prefix="/api/v1/contract", tags=["Contract"])
app.include_router(ledger_router, prefix="/api/v1/ledger", tags=["Ledger"])


@app.get("/health")
async def health_check():
    """
    Health check endpoint for monitoring.

    Single Responsibility: Health status reporting
    """
    return {
        "status": "healthy",
        "version": settings.version,
        "environment": settings.environment,
    }


if __name__ == "__main__":
    uvicorn.run(
        "app.main:app",
        host=settings.api_host,
        port=settings.api_port,
        log_level=settings.log_level.lower(),
    )
