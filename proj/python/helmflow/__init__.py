"""helmflow: tensor kernel compiler and FPGA system planner."""

from ._core import (
    CompileError,
    compile,
    count_flops,
    inverse_helmholtz,
    oracle_digest,
    plan,
)

__all__ = [
    "CompileError",
    "compile",
    "count_flops",
    "inverse_helmholtz",
    "oracle_digest",
    "plan",
]

__version__ = "1.0.0"
