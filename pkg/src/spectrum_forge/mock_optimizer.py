"""Deterministic stand-in optimizer used by desk-scale tests.

Mimics an `opt`-style command line:

    python -m spectrum_forge.mock_optimizer -del-add -nop input.ll -S -o output.ll

Each pass is a named line-level transformation applied in order, so every
pipeline stage downstream has an exact, hand-checkable oracle. Unknown
pass names are identity (mirroring how a real optimizer ignores
passes that do not fire).
"""

import re
import sys
import time


def _opcode_matcher(opcode: str):
    pat = re.compile(rf"^\s*(%[\w.$\"-]+\s*=\s*)?(tail\s+)?{opcode}\b")
    return lambda line: bool(pat.match(line))


def _delete_opcode(opcode: str):
    match = _opcode_matcher(opcode)

    def run(lines):
        return [ln for ln in lines if not match(ln)]

    return run


def _delete_opcode_half(opcode: str):
    match = _opcode_matcher(opcode)

    def run(lines):
        out, seen = [], 0
        for ln in lines:
            if match(ln):
                seen += 1
                if seen % 2 == 0:
                    continue
            out.append(ln)
        return out

    return run


def _nop(lines):
    return lines


def _crash(lines):
    print("mock optimizer: deliberate crash", file=sys.stderr)
    sys.exit(2)


def _sleep(lines):
    time.sleep(5.0)
    return lines


def _oz(lines):
    return _delete_opcode("mul")(_delete_opcode("add")(lines))


PASSES = {
    "nop": _nop,
    "crash": _crash,
    "sleep": _sleep,
    "oz": _oz,
    "del-add-half": _delete_opcode_half("add"),
}
for _op in ("add", "mul", "sub", "and", "or", "xor", "shl",
            "store", "load", "call", "icmp", "select"):
    PASSES[f"del-{_op}"] = _delete_opcode(_op)


def apply_mock_passes(text: str, passes) -> str:
    lines = text.splitlines()
    for name in passes:
        fn = PASSES.get(name, _nop)
        lines = fn(lines)
    return "\n".join(lines) + ("\n" if lines else "")


def main(argv=None) -> int:
    args = sys.argv[1:] if argv is None else list(argv)
    passes, input_path, output_path = [], None, None
    i = 0
    while i < len(args):
        a = args[i]
        if a == "-o":
            i += 1
            output_path = args[i]
        elif a == "-S":
            pass
        elif a.startswith("-"):
            passes.append(a.lstrip("-"))
        else:
            input_path = a
        i += 1
    if input_path is None or output_path is None:
        print("usage: mock_optimizer [-pass ...] input.ll -S -o output.ll", file=sys.stderr)
        return 1
    with open(input_path, encoding="utf-8") as f:
        text = f.read()
    out = apply_mock_passes(text, passes)
    with open(output_path, "w", encoding="utf-8") as f:
        f.write(out)
    return 0


if __name__ == "__main__":
    sys.exit(main())
