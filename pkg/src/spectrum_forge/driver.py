"""Subprocess driver for an external `opt`-style optimizer binary.

One process per (program, pass-sequence) application. Inputs and outputs
go through temporary files under a configurable scratch directory; the
driver never returns partial output.
"""

import subprocess
import sys
import tempfile
from dataclasses import dataclass
from pathlib import Path
from typing import Sequence

from .errors import (
    BinaryNotFound,
    NondeterministicOptimizer,
    OptimizerCrash,
    OptimizerTimeout,
)


@dataclass(frozen=True)
class OptimizerDriver:
    argv: tuple[str, ...]          # command prefix, e.g. ("opt",)
    pass_prefix: str = "-"         # flag style for pass names
    timeout: float = 60.0          # seconds per invocation
    scratch_dir: str | None = None
    verify_determinism: bool = False


def mock_driver(timeout: float = 60.0, **kwargs) -> OptimizerDriver:
    """Driver wired to the bundled mock optimizer."""
    return OptimizerDriver(
        argv=(sys.executable, "-m", "spectrum_forge.mock_optimizer"),
        timeout=timeout,
        **kwargs,
    )


def _run_once(driver: OptimizerDriver, program: str, passes: Sequence[str]) -> str:
    with tempfile.TemporaryDirectory(dir=driver.scratch_dir) as tmp:
        inp = Path(tmp) / "input.ll"
        out = Path(tmp) / "output.ll"
        inp.write_text(program, encoding="utf-8")
        cmd = [
            *driver.argv,
            *(driver.pass_prefix + p for p in passes),
            str(inp), "-S", "-o", str(out),
        ]
        try:
            proc = subprocess.run(
                cmd, capture_output=True, text=True, timeout=driver.timeout
            )
        except FileNotFoundError as e:
            raise BinaryNotFound(f"optimizer not found: {driver.argv[0]}") from e
        except subprocess.TimeoutExpired as e:
            raise OptimizerTimeout(
                f"optimizer exceeded {driver.timeout}s on passes {list(passes)}"
            ) from e
        if proc.returncode != 0:
            raise OptimizerCrash(
                f"optimizer exited {proc.returncode}", stderr=proc.stderr
            )
        if not out.exists():
            raise OptimizerCrash("optimizer produced no output file", stderr=proc.stderr)
        return out.read_text(encoding="utf-8")


def apply_passes(driver: OptimizerDriver, program: str, passes: Sequence[str]) -> str:
    """Apply an ordered pass list to textual IR, returning the optimized IR.

    Raises on timeout or nonzero exit instead of returning partial
    output. With verify_determinism the optimizer is invoked twice and
    the outputs compared byte for byte.
    """
    if not passes:
        raise ValueError("passes must be nonempty")
    result = _run_once(driver, program, passes)
    if driver.verify_determinism:
        again = _run_once(driver, program, passes)
        if again != result:
            raise NondeterministicOptimizer(
                f"two identical invocations disagreed for passes {list(passes)}"
            )
    return result
