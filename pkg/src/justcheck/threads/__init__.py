from .catalog import CATALOG, AlgorithmSpec, UnknownAlgorithm, algorithm_catalog, list_algorithms
from .compiler import CompileError, compile_thread, thread_alphabet, validate_thread_lts
from .ir import ThreadProgram

__all__ = [
    "CATALOG", "AlgorithmSpec", "CompileError", "ThreadProgram", "UnknownAlgorithm",
    "algorithm_catalog", "compile_thread", "list_algorithms", "thread_alphabet",
    "validate_thread_lts",
]
