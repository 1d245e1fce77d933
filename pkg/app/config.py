"""
Configuration Management - Environment-based settings
Supports: Development, Testing, Production environments

Experiment definitions live in YAML config files (see app/cli/config_file.py);
this module only carries process-level defaults.
"""

import os
from typing import Dict, Any
from enum import Enum


class Environment(Enum):
    """Application environments"""
    DEVELOPMENT = "development"
    TESTING = "testing"
    PRODUCTION = "production"


class Config:
    """
    Base configuration class

    Loads settings from environment variables with sensible defaults
    """

    # Application
    APP_NAME: str = "RL Evaluation Toolkit"
    APP_VERSION: str = "1.0.0"
    ENVIRONMENT: str = os.getenv("ENVIRONMENT", "development")
    DEBUG: bool = os.getenv("DEBUG", "false").lower() == "true"

    # Analysis API server
    HOST: str = os.getenv("HOST", "0.0.0.0")
    PORT: int = int(os.getenv("PORT", "8000"))
    RELOAD: bool = os.getenv("RELOAD", "false").lower() == "true"
    CORS_ORIGINS: list = os.getenv(
        "CORS_ORIGINS",
        "http://localhost:3000,http://localhost:8888"  # plotting front-end, notebooks
    ).split(",")
    MAX_SAMPLES_PER_REQUEST: int = int(os.getenv("MAX_SAMPLES_PER_REQUEST", "100000"))

    # Output and record storage
    OUTPUT_DIR: str = os.getenv("RLEVAL_OUTPUT_DIR", "results")
    STORAGE_TYPE: str = os.getenv("STORAGE_TYPE", "file")

    # Experiment execution
    DEFAULT_PARALLELISM: int = int(os.getenv("DEFAULT_PARALLELISM", "1"))
    EVAL_EPISODE_CAP: int = int(os.getenv("EVAL_EPISODE_CAP", "10000"))
    DIVERGENCE_THRESHOLD: float = float(os.getenv("DIVERGENCE_THRESHOLD", "1e6"))

    # Statistics
    BOOTSTRAP_RESAMPLES: int = int(os.getenv("BOOTSTRAP_RESAMPLES", "10000"))

    # Logging
    LOG_LEVEL: str = os.getenv("LOG_LEVEL", "INFO")
    LOG_FORMAT: str = os.getenv(
        "LOG_FORMAT",
        "%(asctime)s - %(name)s - %(levelname)s - %(message)s"
    )

    @classmethod
    def get_storage_config(cls, output_dir: str = None) -> Dict[str, Any]:
        """Get record storage configuration"""
        if cls.STORAGE_TYPE == "file":
            return {"root": output_dir or cls.OUTPUT_DIR}
        else:
            return {}

    @classmethod
    def validate(cls) -> bool:
        """
        Validate configuration

        Returns:
            True if configuration is valid

        Raises:
            ValueError: If settings are inconsistent
        """
        valid_envs = [e.value for e in Environment]
        if cls.ENVIRONMENT not in valid_envs:
            raise ValueError(
                f"Invalid ENVIRONMENT: {cls.ENVIRONMENT}. Must be one of {valid_envs}"
            )

        if cls.STORAGE_TYPE not in ("file", "memory"):
            raise ValueError(f"Unknown STORAGE_TYPE: {cls.STORAGE_TYPE}")

        if cls.DEFAULT_PARALLELISM < 1:
            raise ValueError("DEFAULT_PARALLELISM must be >= 1")

        if cls.BOOTSTRAP_RESAMPLES < 100:
            raise ValueError("BOOTSTRAP_RESAMPLES must be >= 100")

        if cls.EVAL_EPISODE_CAP < 1:
            raise ValueError("EVAL_EPISODE_CAP must be >= 1")

        if cls.DIVERGENCE_THRESHOLD <= 0:
            raise ValueError("DIVERGENCE_THRESHOLD must be positive")

        return True


class DevelopmentConfig(Config):
    """Development environment configuration"""
    DEBUG = True
    LOG_LEVEL = "DEBUG"


class TestingConfig(Config):
    """Testing environment configuration"""
    ENVIRONMENT = "testing"
    STORAGE_TYPE = "memory"
    BOOTSTRAP_RESAMPLES = 2000


class ProductionConfig(Config):
    """Production environment configuration"""
    DEBUG = False
    RELOAD = False


def get_config() -> Config:
    """Get configuration based on environment"""
    env = os.getenv("ENVIRONMENT", "development")

    if env == "production":
        return ProductionConfig()
    elif env == "testing":
        return TestingConfig()
    else:
        return DevelopmentConfig()


# Global config instance
config = get_config()
