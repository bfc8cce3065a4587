"""Tolerant structural scanner for textual LLVM IR.

This is deliberately not a full IR grammar: it delimits function bodies,
splits them into basic blocks, records instruction opcodes and the CFG
edges implied by terminators. Counts, not semantics. Declarations,
metadata, attributes and comments contribute nothing.
"""

import hashlib
import re
from collections import Counter
from dataclasses import dataclass, field

from .errors import ParseError

# Instructions that end a basic block.
TERMINATOR_OPCODES = {
    "br", "switch", "indirectbr", "ret", "unreachable", "resume",
    "invoke", "callbr", "catchswitch", "catchret", "cleanupret",
}

_DEFINE_RE = re.compile(r"^define\b.*?@\"?([^\s(\"]+)\"?\s*\(")
_LABEL_RE = re.compile(r'^"?([A-Za-z0-9._$-]+)"?:\s*(?:;.*)?$')
_DIGIT_LABEL_RE = re.compile(r"^;\s*<label>:(\d+)")
_INSTR_RE = re.compile(r"^(?:%[\w.$\"-]+\s*=\s*)?([a-z][a-z0-9_.]*)\b(.*)$")
_SUCC_RE = re.compile(r"label\s+%([\w.$-]+)")

# Call-site modifiers that may precede the real opcode after `=`.
_CALL_MODIFIERS = {"tail", "musttail", "notail"}


@dataclass
class Instruction:
    opcode: str
    text: str  # full instruction text, switch arms folded in


@dataclass
class BasicBlock:
    label: str
    instructions: list[Instruction] = field(default_factory=list)
    successors: list[str] = field(default_factory=list)
    predecessors: list[str] = field(default_factory=list)

    @property
    def opcodes(self) -> list[str]:
        return [i.opcode for i in self.instructions]


@dataclass
class FunctionStats:
    name: str
    blocks: list[BasicBlock] = field(default_factory=list)

    @property
    def basic_block_count(self) -> int:
        return len(self.blocks)

    @property
    def instruction_counts(self) -> Counter:
        c = Counter()
        for b in self.blocks:
            c.update(b.opcodes)
        return c

    @property
    def edge_count(self) -> int:
        return sum(len(b.successors) for b in self.blocks)


@dataclass
class IrModule:
    source_path: str
    functions: list[FunctionStats]
    raw_text_hash: str

    def instruction_counts(self) -> Counter:
        c = Counter()
        for f in self.functions:
            c.update(f.instruction_counts)
        return c


def _strip_comment(line: str) -> str:
    # IR string constants are rare outside metadata; only strip when no
    # quote is present so we never cut inside a literal.
    if ";" in line and '"' not in line:
        line = line[: line.index(";")]
    return line.strip()


def _parse_instruction(line: str) -> Instruction | None:
    m = _INSTR_RE.match(line)
    if not m:
        return None
    opcode, rest = m.group(1), m.group(2)
    if opcode in _CALL_MODIFIERS:
        m2 = _INSTR_RE.match(rest.strip())
        if m2:
            opcode = m2.group(1)
    return Instruction(opcode=opcode, text=line)


def parse_ir(text: str, source_path: str = "<string>") -> IrModule:
    """Parse textual LLVM IR into per-function block/instruction stats.

    Raises ParseError when no function definition can be delimited.
    Unknown opcodes are kept verbatim; downstream schemas bucket them.
    """
    functions: list[FunctionStats] = []
    current: FunctionStats | None = None
    block: BasicBlock | None = None
    anon_counter = 0
    in_switch = False

    for raw in text.splitlines():
        label_hint = _DIGIT_LABEL_RE.match(raw.strip())
        line = _strip_comment(raw)
        if not line:
            continue

        if current is None:
            if line.startswith("define"):
                m = _DEFINE_RE.match(line)
                name = m.group(1) if m else f"<anon{len(functions)}>"
                current = FunctionStats(name=name)
                block = None
                anon_counter = 0
            continue

        if in_switch:
            # Continuation arms of a multi-line switch: collect targets.
            block.instructions[-1].text += " " + line
            block.successors.extend(_SUCC_RE.findall(line))
            if "]" in line:
                in_switch = False
            continue

        if line.startswith("}"):
            functions.append(current)
            current = None
            continue

        lm = _LABEL_RE.match(line)
        if lm or label_hint:
            label = lm.group(1) if lm else label_hint.group(1)
            block = BasicBlock(label=label)
            current.blocks.append(block)
            continue

        if line.startswith(("declare", "attributes", "!", "target ", "source_filename")):
            continue

        instr = _parse_instruction(line)
        if instr is None:
            continue
        if block is None:
            block = BasicBlock(label=f"<entry{anon_counter}>")
            anon_counter += 1
            current.blocks.append(block)
        block.instructions.append(instr)
        if instr.opcode in TERMINATOR_OPCODES:
            block.successors.extend(_SUCC_RE.findall(instr.text))
            if instr.opcode == "switch" and "]" not in instr.text:
                in_switch = True

    if current is not None:
        # Unterminated function body; keep what we saw.
        functions.append(current)

    if not functions:
        raise ParseError("no function definition found in input")

    for f in functions:
        by_label = {b.label: b for b in f.blocks}
        for b in f.blocks:
            # Targets outside the function (tolerated) produce no edge.
            b.successors = [s for s in b.successors if s in by_label]
        for b in f.blocks:
            for s in b.successors:
                by_label[s].predecessors.append(b.label)

    digest = hashlib.sha256(text.encode("utf-8")).hexdigest()
    return IrModule(source_path=source_path, functions=functions, raw_text_hash=digest)


def instruction_count(m: IrModule) -> int:
    """Total instructions across all functions."""
    return sum(len(b.instructions) for f in m.functions for b in f.blocks)
