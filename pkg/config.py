"""
Configuration Management for the Production System Simulator
"""
import logging
import os
from dotenv import load_dotenv

load_dotenv()


class Config:
    """Application configuration"""

    # Application settings
    APP_NAME = "Quantum Production System Simulator"
    VERSION = "1.0.0"
    DEBUG = os.getenv("DEBUG", "False").lower() == "true"
    LOG_LEVEL = os.getenv("LOG_LEVEL", "WARNING").upper()

    # Classical engines
    STEP_LIMIT = int(os.getenv("STEP_LIMIT", "10000"))
    NORMALIZATION_TOLERANCE = float(os.getenv("NORMALIZATION_TOLERANCE", "1e-9"))

    # Quantum simulation
    STATEVECTOR_TOLERANCE = float(os.getenv("STATEVECTOR_TOLERANCE", "1e-12"))
    MAX_SIMULATION_QUBITS = int(os.getenv("MAX_SIMULATION_QUBITS", "22"))
    MAX_DENSE_EXPORT_BITS = int(os.getenv("MAX_DENSE_EXPORT_BITS", "12"))

    # Sampling
    DEFAULT_SEED = int(os.getenv("DEFAULT_SEED", "0"))
    DEFAULT_SHOTS = int(os.getenv("DEFAULT_SHOTS", "1024"))

    @classmethod
    def log_level(cls) -> int:
        """Numeric logging level, DEBUG wins over LOG_LEVEL"""
        if cls.DEBUG:
            return logging.DEBUG
        return logging.getLevelName(cls.LOG_LEVEL)

    @classmethod
    def validate_config(cls):
        """Validate configuration values"""
        errors = []

        if cls.STEP_LIMIT < 0:
            errors.append(f"STEP_LIMIT must be non-negative: {cls.STEP_LIMIT}")

        for name in ("NORMALIZATION_TOLERANCE", "STATEVECTOR_TOLERANCE"):
            value = getattr(cls, name)
            if not 0.0 < value < 1.0:
                errors.append(f"{name} must lie in (0, 1): {value}")

        if cls.MAX_SIMULATION_QUBITS < 1:
            errors.append(f"MAX_SIMULATION_QUBITS must be positive: {cls.MAX_SIMULATION_QUBITS}")

        if cls.MAX_DENSE_EXPORT_BITS < 1:
            errors.append(f"MAX_DENSE_EXPORT_BITS must be positive: {cls.MAX_DENSE_EXPORT_BITS}")

        if cls.DEFAULT_SHOTS < 1:
            errors.append(f"DEFAULT_SHOTS must be positive: {cls.DEFAULT_SHOTS}")

        if not isinstance(logging.getLevelName(cls.LOG_LEVEL), int):
            errors.append(f"Unknown LOG_LEVEL: {cls.LOG_LEVEL}")

        return errors
