#!/usr/bin/env python3
"""Generates the integer test sources under src/ with expected values
computed here from Python integers."""

import random
from pathlib import Path

SRC = Path(__file__).parent / "src"


def mask(x):
    return (1 << x) - 1


def sx(v, bits):
    v &= mask(bits)
    return v - (1 << bits) if v >> (bits - 1) else v


def ux(v, bits):
    return v & mask(bits)


def hexv(v, xlen):
    return hex(ux(v, xlen))


def div_trunc(a, b):
    q = abs(a) // abs(b)
    return q if (a < 0) == (b < 0) else -q


def rem_trunc(a, b):
    return a - b * div_trunc(a, b)


def rr(op, a, b, x):
    sa, sb, ua, ub = sx(a, x), sx(b, x), ux(a, x), ux(b, x)
    sh = ub & (x - 1)
    if op == "add":
        return sa + sb
    if op == "sub":
        return sa - sb
    if op == "sll":
        return ua << sh
    if op == "slt":
        return int(sa < sb)
    if op == "sltu":
        return int(ua < ub)
    if op == "xor":
        return ua ^ ub
    if op == "srl":
        return ua >> sh
    if op == "sra":
        return sa >> sh
    if op == "or":
        return ua | ub
    if op == "and":
        return ua & ub
    if op == "mul":
        return sa * sb
    if op == "mulh":
        return (sa * sb) >> x
    if op == "mulhsu":
        return (sa * ub) >> x
    if op == "mulhu":
        return (ua * ub) >> x
    if op == "div":
        if sb == 0:
            return -1
        if sa == -(1 << (x - 1)) and sb == -1:
            return sa
        return div_trunc(sa, sb)
    if op == "divu":
        return mask(x) if ub == 0 else ua // ub
    if op == "rem":
        if sb == 0:
            return sa
        if sa == -(1 << (x - 1)) and sb == -1:
            return 0
        return rem_trunc(sa, sb)
    if op == "remu":
        return ua if ub == 0 else ua % ub
    if op.endswith("w"):
        return sx(rr(op[:-1], sx(a, 32), sx(b, 32), 32), 32)
    raise ValueError(op)


IMM = {"addi": "add", "slti": "slt", "sltiu": "sltu", "xori": "xor", "ori": "or", "andi": "and"}
SHIFT_IMM = {"slli": "sll", "srli": "srl", "srai": "sra"}
BRANCH = {
    "beq": lambda a, b, x: a == b,
    "bne": lambda a, b, x: a != b,
    "blt": lambda a, b, x: sx(a, x) < sx(b, x),
    "bge": lambda a, b, x: sx(a, x) >= sx(b, x),
    "bltu": lambda a, b, x: ux(a, x) < ux(b, x),
    "bgeu": lambda a, b, x: ux(a, x) >= ux(b, x),
}


def operands(rng, x):
    edge = [0, 1, 2, 3, 7, -1, -2, 0x7FF, -0x800, 0x7FFF, 0x8000, 0xFFFF,
            (1 << (x - 1)), (1 << (x - 1)) - 1, 0x80000000, 0x7FFFFFFF, 0xFFFFFFFF]
    vals = [ux(v, x) for v in edge]
    vals += [rng.getrandbits(x) for _ in range(6)]
    vals += [rng.getrandbits(rng.randint(1, x)) for _ in range(6)]
    return vals


def cases_rr(op, x, rng, count):
    vals = operands(rng, x)
    pairs = [(vals[i % len(vals)], vals[(i * 7 + 3) % len(vals)]) for i in range(len(vals))]
    rng.shuffle(pairs)
    pairs = pairs[:count - 4] + [(rng.choice(vals), rng.choice(vals)) for _ in range(2)]
    lines = []
    n = 2
    for a, b in pairs:
        r = rr(op, a, b, x)
        lines.append(f"  TEST_RR_OP({n}, {op}, {hexv(r, x)}, {hexv(a, x)}, {hexv(b, x)});")
        n += 1
    a = rng.choice(vals)
    lines.append(f"  TEST_RR_SRC12_EQ_DEST({n}, {op}, {hexv(rr(op, a, a, x), x)}, {hexv(a, x)});")
    n += 1
    lines.append(f"  TEST_RR_ZERODEST({n}, {op}, {hexv(vals[5], x)}, {hexv(vals[3], x)});")
    return lines


def cases_imm(op, x, rng, count):
    base = IMM.get(op) or SHIFT_IMM.get(op) or SHIFT_IMM.get(op[:-1])
    vals = operands(rng, x)
    lines = []
    n = 2
    for i in range(count):
        a = vals[i % len(vals)] if i < len(vals) else rng.getrandbits(x)
        if op in SHIFT_IMM or op in ("slliw", "srliw", "sraiw"):
            width = 32 if op.endswith("w") else x
            imm = [0, 1, width - 1, width // 2, rng.randrange(width)][i % 5]
            if op.endswith("w"):
                r = sx(rr(base, sx(a, 32), imm, 32), 32)
            else:
                r = rr(base, a, imm, x)
        else:
            imm = [0, 1, -1, 2047, -2048, rng.randrange(-2048, 2048)][i % 6]
            if op == "addiw":
                r = sx(sx(a, 32) + imm, 32)
            else:
                r = rr(base, a, ux(imm, x), x)
        macro = "TEST_IMM_SRC1_EQ_DEST" if i == count - 1 else "TEST_IMM_OP"
        lines.append(f"  {macro}({n}, {op}, {hexv(r, x)}, {hexv(a, x)}, {imm});")
        n += 1
    return lines


def cases_branch(op, x, rng, count):
    vals = operands(rng, x)
    lines = []
    for i in range(count):
        a = vals[i % len(vals)]
        b = vals[(i * 5 + 1) % len(vals)] if i % 3 else a
        taken = BRANCH[op](ux(a, x), ux(b, x), x)
        macro = "TEST_BR2_TAKEN" if taken else "TEST_BR2_NOT_TAKEN"
        lines.append(f"  {macro}({i + 2}, {op}, {hexv(a, x)}, {hexv(b, x)});")
    return lines


def lui_cases(x, rng):
    lines = []
    for n, imm in enumerate([0, 1, 0x7FFFF, 0x80000, 0xFFFFF, rng.getrandbits(20), rng.getrandbits(20)], start=2):
        lines.append(f"  TEST_CASE({n}, x1, {hexv(sx(imm << 12, 32), x)}, lui x1, {hex(imm)});")
    return lines


DATA_BYTES = [0xFF, 0x00, 0xF0, 0x0F, 0x00, 0xFF, 0x0F, 0xF0, 0x80, 0x01, 0x7F, 0xFE, 0x23, 0x45, 0x67, 0x89,
              0xAB, 0xCD, 0xEF, 0x10, 0x32, 0x54, 0x76, 0x98, 0x11, 0x22, 0x33, 0x44, 0x55, 0x66, 0x77, 0x88]
LOADS = {"lb": (1, True), "lh": (2, True), "lw": (4, True), "ld": (8, True),
         "lbu": (1, False), "lhu": (2, False), "lwu": (4, False)}


def cases_load(op, x, rng):
    n_bytes, signed = LOADS[op]
    lines = []
    for n, offset in enumerate(range(-16, 16, n_bytes), start=2):
        v = int.from_bytes(bytes(DATA_BYTES[16 + offset:16 + offset + n_bytes]), "little")
        r = sx(v, n_bytes * 8) if signed else v
        lines.append(f"  TEST_LD_OP({n}, {op}, {hexv(r, x)}, {offset}, tdat + 16);")
    return lines


def data_section():
    return "  .align 3\ntdat:\n" + "\n".join(f"  .byte {hex(b)}" for b in DATA_BYTES) + "\n"


STORES = {"sb": ("lb", 1), "sh": ("lh", 2), "sw": ("lw", 4), "sd": ("ld", 8)}


def cases_store(op, x, rng):
    load, n_bytes = STORES[op]
    lines = []
    n = 2
    for i in range(12):
        v = sx(rng.getrandbits(n_bytes * 8), n_bytes * 8)
        if i < 3:
            v = [0, -1, -(1 << (n_bytes * 8 - 1))][i]
        offset = (i % 4) * n_bytes - (8 if i >= 6 else 0)
        base = "sdat + 8" if i >= 6 else "sdat"
        lines.append(f"  TEST_ST_OP({n}, {load}, {op}, {hexv(v, x)}, {offset}, {base});")
        n += 1
    return lines


AMO = {
    "swap": lambda o, v, n: v,
    "add": lambda o, v, n: o + v,
    "xor": lambda o, v, n: o ^ v,
    "and": lambda o, v, n: o & v,
    "or": lambda o, v, n: o | v,
    "min": lambda o, v, n: min(sx(o, n), sx(v, n)),
    "max": lambda o, v, n: max(sx(o, n), sx(v, n)),
    "minu": lambda o, v, n: min(ux(o, n), ux(v, n)),
    "maxu": lambda o, v, n: max(ux(o, n), ux(v, n)),
}


def cases_amo(op, suffix, x, rng):
    n_bits = 32 if suffix == "w" else 64
    load = "lw" if suffix == "w" else "ld"
    store = "sw" if suffix == "w" else "sd"
    vals = [0, 1, -1, 1 << (n_bits - 1), (1 << (n_bits - 1)) - 1, -0x800, 0x7FF]
    lines = []
    n = 2
    for i in range(6):
        old = vals[i] if i < 4 else rng.getrandbits(n_bits)
        v = vals[(i + 3) % len(vals)] if i < 4 else rng.getrandbits(n_bits)
        new = AMO[op](ux(old, n_bits), ux(v, n_bits), n_bits)
        lines.append(f"  TEST_CASE({n}, a4, {hexv(sx(old, n_bits), x)}, li a0, {hexv(sx(old, n_bits), x)}; "
                     f"li a1, {hexv(sx(v, n_bits), x)}; la a3, amo_operand; {store} a0, 0(a3); "
                     f"amo{op}.{suffix} a4, a1, (a3));")
        lines.append(f"  TEST_CASE({n + 1}, a5, {hexv(sx(new, n_bits), x)}, {load} a5, 0(a3));")
        n += 2
    return lines


def emit(path, body32, body64, data="", rv64_only=False):
    header = "// rv64\n" if rv64_only else ""
    text = header + '#include "rvtest.h"\n\nRVTEST_CODE_BEGIN\n\n'
    if rv64_only:
        text += "\n".join(body64) + "\n"
    else:
        text += "#if __riscv_xlen == 64\n" + "\n".join(body64) + "\n#else\n" + "\n".join(body32) + "\n#endif\n"
    text += "\n  TEST_PASSFAIL\n\nRVTEST_CODE_END\n\n  .data\nRVTEST_DATA_BEGIN\n" + data + "RVTEST_DATA_END\n"
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_text(text)


def main():
    both = lambda f: (f(32), f(64))
    for op in ["add", "sub", "sll", "slt", "sltu", "xor", "srl", "sra", "or", "and"]:
        b32, b64 = both(lambda x: cases_rr(op, x, random.Random(f"{op}{x}"), 24))
        emit(SRC / "ui" / f"{op}.S", b32, b64)
    for op in list(IMM) + list(SHIFT_IMM):
        b32, b64 = both(lambda x: cases_imm(op, x, random.Random(f"{op}{x}"), 20))
        emit(SRC / "ui" / f"{op}.S", b32, b64)
    for op in BRANCH:
        b32, b64 = both(lambda x: cases_branch(op, x, random.Random(f"{op}{x}"), 14))
        emit(SRC / "ui" / f"{op}.S", b32, b64)
    b32, b64 = both(lambda x: lui_cases(x, random.Random(f"lui{x}")))
    emit(SRC / "ui" / "lui.S", b32, b64)
    data = data_section() + "  .align 3\nsdat:\n  .zero 64\n"
    for op in LOADS:
        rv64 = op in ("ld", "lwu")
        b32, b64 = both(lambda x: cases_load(op, x, random.Random(f"{op}{x}")))
        emit(SRC / "ui" / f"{op}.S", b32, b64, data, rv64_only=rv64)
    for op in STORES:
        b32, b64 = both(lambda x: cases_store(op, x, random.Random(f"{op}{x}")))
        emit(SRC / "ui" / f"{op}.S", b32, b64, data, rv64_only=op == "sd")
    for op in ["addw", "subw", "sllw", "srlw", "sraw"]:
        emit(SRC / "ui" / f"{op}.S", [], cases_rr(op, 64, random.Random(op), 20), rv64_only=True)
    for op in ["addiw", "slliw", "srliw", "sraiw"]:
        emit(SRC / "ui" / f"{op}.S", [], cases_imm(op, 64, random.Random(op), 16), rv64_only=True)
    for op in ["mul", "mulh", "mulhsu", "mulhu", "div", "divu", "rem", "remu"]:
        b32, b64 = both(lambda x: cases_rr(op, x, random.Random(f"{op}{x}"), 24))
        emit(SRC / "um" / f"{op}.S", b32, b64)
    amo_data = "  .align 3\namo_operand:\n  .dword 0\n"
    for op in AMO:
        b32, b64 = both(lambda x: cases_amo(op, "w", x, random.Random(f"{op}w{x}")))
        emit(SRC / "ua" / f"amo{op}_w.S", b32, b64, amo_data)
        emit(SRC / "ua" / f"amo{op}_d.S", [], cases_amo(op, "d", 64, random.Random(f"{op}d")), amo_data,
             rv64_only=True)
    for op in ["mulw", "divw", "divuw", "remw", "remuw"]:
        emit(SRC / "um" / f"{op}.S", [], cases_rr(op, 64, random.Random(op), 20), rv64_only=True)


if __name__ == "__main__":
    main()
