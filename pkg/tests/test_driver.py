import dataclasses

import pytest

from spectrum_forge import ir
from spectrum_forge.driver import apply_passes, mock_driver
from spectrum_forge.errors import (
    BinaryNotFound,
    OptimizerCrash,
    OptimizerTimeout,
)
from spectrum_forge.driver import OptimizerDriver

from conftest import fixture_text


def test_empty_pass_list_rejected(driver):
    with pytest.raises(ValueError):
        apply_passes(driver, fixture_text("simple_add.ll"), [])


def test_identity_pass_returns_input(driver):
    text = fixture_text("simple_add.ll")
    assert apply_passes(driver, text, ["nop"]) == text


def test_delete_adds_removes_three(driver):
    text = fixture_text("simple_add.ll")
    out = apply_passes(driver, text, ["del-add"])
    assert ir.instruction_count(ir.parse_ir(out)) == 5 - 3


def test_passes_apply_in_order(driver):
    text = fixture_text("memory.ll")
    out = apply_passes(driver, text, ["del-mul", "del-store", "nop"])
    counts = ir.parse_ir(out).instruction_counts()
    assert counts["mul"] == 0 and counts["store"] == 0
    assert ir.instruction_count(ir.parse_ir(out)) == 6 - 3


def test_unknown_pass_is_identity(driver):
    text = fixture_text("branch.ll")
    assert apply_passes(driver, text, ["instcombine"]) == text


def test_crash_raises_with_stderr(driver):
    with pytest.raises(OptimizerCrash) as exc:
        apply_passes(driver, fixture_text("simple_add.ll"), ["crash"])
    assert "crash" in exc.value.stderr


def test_timeout_raises():
    fast = mock_driver(timeout=0.5)
    with pytest.raises(OptimizerTimeout):
        apply_passes(fast, fixture_text("simple_add.ll"), ["sleep"])


def test_missing_binary_raises():
    bad = OptimizerDriver(argv=("/nonexistent/opt-binary",))
    with pytest.raises(BinaryNotFound):
        apply_passes(bad, fixture_text("simple_add.ll"), ["nop"])


def test_determinism_verification_passes_on_mock(driver):
    checked = dataclasses.replace(driver, verify_determinism=True)
    text = fixture_text("loop.ll")
    a = apply_passes(checked, text, ["del-add"])
    b = apply_passes(checked, text, ["del-add"])
    assert a == b
