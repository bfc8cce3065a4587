"""Static feature vectors over parsed IR modules.

Two schemas: a pinned 56-entry Autophase-style vector (see
autophase_schema.md at the repo root for the per-entry counting rules)
and a raw opcode-count vector. Both aggregate whole-module (sum over
functions) and are pure functions of the parsed module.
"""

import re
from dataclasses import dataclass

import numpy as np

from .ir import BasicBlock, IrModule

AUTOPHASE_SCHEMA_ID = "autophase-56/v1"
AUTOPHASE_DIM = 56

AUTOPHASE_FEATURE_NAMES = [
    "BBNumArgsHi", "BBNumArgsLo", "onePred", "onePredOneSuc",
    "onePredTwoSuc", "oneSuccessor", "twoPred", "twoPredOneSuc",
    "twoEach", "twoSuccessor", "morePreds", "BB03Phi", "BBHiPhi",
    "BBNoPhi", "BeginPhi", "BranchCount", "returnInt", "CriticalCount",
    "NumEdges", "const32Bit", "const64Bit", "numConstZeroes",
    "numConstOnes", "UncondBranches", "binaryConstArg", "NumAShrInst",
    "NumAddInst", "NumAllocaInst", "NumAndInst", "BlockMid", "BlockLow",
    "NumBitCastInst", "NumBrInst", "NumCallInst", "NumGetElementPtrInst",
    "NumICmpInst", "NumLShrInst", "NumLoadInst", "NumMulInst",
    "NumOrInst", "NumPHIInst", "NumRetInst", "NumSExtInst",
    "NumSelectInst", "NumShlInst", "NumStoreInst", "NumSubInst",
    "NumTruncInst", "NumXorInst", "NumZExtInst", "TotalBlocks",
    "TotalInsts", "TotalMemInst", "TotalFuncs", "ArgsPhi", "testUnary",
]
assert len(AUTOPHASE_FEATURE_NAMES) == AUTOPHASE_DIM

_OPCODE_FEATURES = {
    "NumAShrInst": "ashr", "NumAddInst": "add", "NumAllocaInst": "alloca",
    "NumAndInst": "and", "NumBitCastInst": "bitcast", "NumBrInst": "br",
    "NumCallInst": "call", "NumGetElementPtrInst": "getelementptr",
    "NumICmpInst": "icmp", "NumLShrInst": "lshr", "NumLoadInst": "load",
    "NumMulInst": "mul", "NumOrInst": "or", "NumPHIInst": "phi",
    "NumRetInst": "ret", "NumSExtInst": "sext", "NumSelectInst": "select",
    "NumShlInst": "shl", "NumStoreInst": "store", "NumSubInst": "sub",
    "NumTruncInst": "trunc", "NumXorInst": "xor", "NumZExtInst": "zext",
}

BINARY_OPS = {
    "add", "fadd", "sub", "fsub", "mul", "fmul", "udiv", "sdiv", "fdiv",
    "urem", "srem", "frem", "shl", "lshr", "ashr", "and", "or", "xor",
}

MEM_OPS = {"load", "store", "alloca", "getelementptr"}

# The fixed opcode universe for InstCount; anything else buckets to "other".
INSTCOUNT_SCHEMA_ID = "instcount-llvm/v1"
INSTCOUNT_OPCODES = [
    "ret", "br", "switch", "indirectbr", "invoke", "callbr", "resume",
    "unreachable", "cleanupret", "catchret", "catchswitch", "fneg",
    "add", "fadd", "sub", "fsub", "mul", "fmul", "udiv", "sdiv", "fdiv",
    "urem", "srem", "frem", "shl", "lshr", "ashr", "and", "or", "xor",
    "alloca", "load", "store", "getelementptr", "fence", "cmpxchg",
    "atomicrmw", "trunc", "zext", "sext", "fptrunc", "fpext", "fptoui",
    "fptosi", "uitofp", "sitofp", "ptrtoint", "inttoptr", "bitcast",
    "addrspacecast", "icmp", "fcmp", "phi", "select", "call", "va_arg",
    "landingpad", "catchpad", "cleanuppad", "extractelement",
    "insertelement", "shufflevector", "extractvalue", "insertvalue",
    "freeze", "other",
]
_OPCODE_INDEX = {op: i for i, op in enumerate(INSTCOUNT_OPCODES)}


@dataclass(frozen=True)
class FeatureVector:
    values: np.ndarray  # shape (56,), non-negative counts
    schema_id: str = AUTOPHASE_SCHEMA_ID

    def __post_init__(self):
        if self.values.shape != (AUTOPHASE_DIM,):
            raise ValueError(f"expected {AUTOPHASE_DIM}-dim vector, got {self.values.shape}")


@dataclass(frozen=True)
class InstCountVector:
    values: np.ndarray  # aligned to INSTCOUNT_OPCODES
    schema_id: str = INSTCOUNT_SCHEMA_ID

    @property
    def total_instructions(self) -> int:
        return int(self.values.sum())

    def as_dict(self) -> dict:
        return {op: int(n) for op, n in zip(INSTCOUNT_OPCODES, self.values) if n}


_ALIGN_RE = re.compile(r"\balign\s+\d+")
_META_RE = re.compile(r"![\w.{}\"]+")
_LABEL_REF_RE = re.compile(r"label\s+%[\w.$-]+")
_INT_LIT_RE = re.compile(r"(?<![\w.%@$-])-?\d+\b")
_TYPED32_RE = re.compile(r"\bi32\s+(-?\d+)\b")
_TYPED64_RE = re.compile(r"\bi64\s+(-?\d+)\b")
_RET_INT_RE = re.compile(r"^ret\s+i\d+\b")
_PHI_ARM_RE = re.compile(r"\[")


def _operand_text(instr_text: str, opcode: str) -> str:
    """Instruction text with alignment, metadata and label refs removed,
    so literal scans see operands only."""
    t = instr_text
    idx = t.find(opcode)
    if idx >= 0:
        t = t[idx + len(opcode):]
    t = _ALIGN_RE.sub("", t)
    t = _META_RE.sub("", t)
    t = _LABEL_REF_RE.sub("", t)
    return t


def _phi_arg_count(text: str) -> int:
    return len(_PHI_ARM_RE.findall(text))


def _block_features(b: BasicBlock, acc: dict) -> None:
    n_pred = len(b.predecessors)
    n_succ = len(b.successors)
    if n_pred == 1:
        acc["onePred"] += 1
        if n_succ == 1:
            acc["onePredOneSuc"] += 1
        if n_succ == 2:
            acc["onePredTwoSuc"] += 1
    if n_pred == 2:
        acc["twoPred"] += 1
        if n_succ == 1:
            acc["twoPredOneSuc"] += 1
        if n_succ == 2:
            acc["twoEach"] += 1
    if n_pred > 2:
        acc["morePreds"] += 1
    if n_succ == 1:
        acc["oneSuccessor"] += 1
    if n_succ == 2:
        acc["twoSuccessor"] += 1

    phis = [i for i in b.instructions if i.opcode == "phi"]
    phi_args = sum(_phi_arg_count(i.text) for i in phis)
    if phi_args > 5:
        acc["BBNumArgsHi"] += 1
    elif phi_args >= 1:
        acc["BBNumArgsLo"] += 1
    n_phi = len(phis)
    if n_phi == 0:
        acc["BBNoPhi"] += 1
    elif n_phi <= 3:
        acc["BB03Phi"] += 1
    else:
        acc["BBHiPhi"] += 1
    if b.instructions and b.instructions[0].opcode == "phi":
        acc["BeginPhi"] += 1
    acc["ArgsPhi"] += phi_args

    n = len(b.instructions)
    if n < 15:
        acc["BlockLow"] += 1
    elif n <= 500:
        acc["BlockMid"] += 1


_FEATURE_BY_OPCODE = {op: feat for feat, op in _OPCODE_FEATURES.items()}


def _instruction_features(opcode: str, text: str, acc: dict) -> None:
    feat = _FEATURE_BY_OPCODE.get(opcode)
    if feat is not None:
        acc[feat] += 1
    if opcode == "br":
        acc["BranchCount"] += 1
        if "," not in text:
            acc["UncondBranches"] += 1
    if opcode == "ret" and _RET_INT_RE.match(text.replace("tail ", "")):
        acc["returnInt"] += 1
    if opcode == "fneg":
        acc["testUnary"] += 1
    if opcode in MEM_OPS:
        acc["TotalMemInst"] += 1

    ops = _operand_text(text, opcode)
    acc["const32Bit"] += len(_TYPED32_RE.findall(ops))
    acc["const64Bit"] += len(_TYPED64_RE.findall(ops))
    lits = _INT_LIT_RE.findall(ops)
    acc["numConstZeroes"] += sum(1 for v in lits if int(v) == 0)
    acc["numConstOnes"] += sum(1 for v in lits if int(v) == 1)
    if opcode in BINARY_OPS and lits:
        acc["binaryConstArg"] += 1


def extract_autophase(m: IrModule) -> FeatureVector:
    """Whole-module 56-entry Autophase-style vector. Deterministic;
    an empty-but-parsed module yields all zeros."""
    acc = {name: 0 for name in AUTOPHASE_FEATURE_NAMES}
    for f in m.functions:
        if any(b.instructions for b in f.blocks):
            acc["TotalFuncs"] += 1
        by_label = {b.label: b for b in f.blocks}
        for b in f.blocks:
            acc["TotalBlocks"] += 1
            acc["NumEdges"] += len(b.successors)
            if len(b.successors) > 1:
                for s in b.successors:
                    if len(by_label[s].predecessors) > 1:
                        acc["CriticalCount"] += 1
            _block_features(b, acc)
            for instr in b.instructions:
                acc["TotalInsts"] += 1
                _instruction_features(instr.opcode, instr.text, acc)
    values = np.array([acc[n] for n in AUTOPHASE_FEATURE_NAMES], dtype=np.int64)
    return FeatureVector(values=values)


def extract_instcount(m: IrModule) -> InstCountVector:
    """Opcode-count vector over the fixed InstCount schema; unknown
    opcodes land in the reserved "other" bucket."""
    values = np.zeros(len(INSTCOUNT_OPCODES), dtype=np.int64)
    for opcode, n in m.instruction_counts().items():
        values[_OPCODE_INDEX.get(opcode, _OPCODE_INDEX["other"])] += n
    return InstCountVector(values=values)
