"""Cortex-M0 (STM32F0xx) simulation and event-counter energy modeling.

Pieces: a cycle-accurate ARMv6-M Thumb simulator that collects the six
energy-model event counters, the ten published per-configuration energy
models, zero-intercept regression with k-fold cross-validation for
training new models, and static basic-block counter/energy attribution.
"""

from .asm import Assembler
from .cfg import (BasicBlock, CFG, EnergyInterval, StaticCounts, block_energy,
                  extract_cfg, path_energy, static_block_counters)
from .counters import EventCounters
from .cpu import CpuState, RunSummary, Simulator, StepResult, DEFAULT_TIMING
from .decode import Instruction, decode
from .energy import (EnergyModel, HardwareConfig, builtin_configs,
                     builtin_model, builtin_models, compare_configs, estimate,
                     load_models, relative_weights, save_models)
from .errors import (AnalysisError, BadEntryError, DatasetError,
                     DegenerateDesignError, InvalidConfigError, M0EnergyError,
                     MalformedImageError, MemoryFault, PathError,
                     UndefinedInstructionError)
from .memory import MemorySystem, FetchUnit, DEBUG_ADDR, FLASH_BASE, RAM_BASE
from .regression import (CVResult, FitResult, FoldScore, RegressionDataset,
                         fit, fold_indices, kfold_cv, load_dataset, mape, r2,
                         resd, save_dataset)

__version__ = "0.1.0"

__all__ = [
    "Assembler", "BasicBlock", "CFG", "EnergyInterval", "StaticCounts",
    "block_energy", "extract_cfg", "path_energy", "static_block_counters",
    "EventCounters", "CpuState", "RunSummary", "Simulator", "StepResult",
    "DEFAULT_TIMING", "Instruction", "decode", "EnergyModel",
    "HardwareConfig", "builtin_configs", "builtin_model", "builtin_models",
    "compare_configs", "estimate", "load_models", "relative_weights",
    "save_models", "AnalysisError", "BadEntryError", "DatasetError",
    "DegenerateDesignError", "InvalidConfigError", "M0EnergyError",
    "MalformedImageError", "MemoryFault", "PathError",
    "UndefinedInstructionError", "MemorySystem", "FetchUnit", "DEBUG_ADDR",
    "FLASH_BASE", "RAM_BASE", "CVResult", "FitResult", "FoldScore",
    "RegressionDataset", "fit", "fold_indices", "kfold_cv", "load_dataset",
    "mape", "r2", "resd", "save_dataset",
]
