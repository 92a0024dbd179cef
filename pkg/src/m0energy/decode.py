"""ARMv6-M Thumb decoder.

Covers the 16-bit Thumb-1 set plus the 32-bit BL encoding, i.e. the subset a
bare-metal Cortex-M0 compute kernel uses.  SVC, CPS, barriers, MRS/MSR and
every other 32-bit encoding raise UndefinedInstructionError.

Each decoded instruction carries an internal `op` id used for execution
dispatch, a display mnemonic, an operand dict, and a pre-rendered text form.
Branch targets and literal-pool addresses are resolved at decode time (they
only depend on the instruction address).
"""

from dataclasses import dataclass, field

from .errors import UndefinedInstructionError

COND_NAMES = ["EQ", "NE", "CS", "CC", "MI", "PL", "VS", "VC",
              "HI", "LS", "GE", "LT", "GT", "LE"]

# Data-processing ops, encoding 0b010000 oooo, in table order.
DP_OPS = ["ANDS", "EORS", "LSLS_REG", "LSRS_REG", "ASRS_REG", "ADCS", "SBCS",
          "RORS", "TST", "RSBS", "CMP_REG", "CMN", "ORRS", "MULS", "BICS",
          "MVNS"]
DP_MNEMONICS = ["ANDS", "EORS", "LSLS", "LSRS", "ASRS", "ADCS", "SBCS",
                "RORS", "TST", "RSBS", "CMP", "CMN", "ORRS", "MULS", "BICS",
                "MVNS"]

HINT_NAMES = {0x0: "NOP", 0x1: "YIELD", 0x2: "WFE", 0x3: "WFI", 0x4: "SEV"}

LOAD_OPS = frozenset([
    "LDR_LIT", "LDR_REG", "LDRH_REG", "LDRB_REG", "LDRSB_REG", "LDRSH_REG",
    "LDR_IMM", "LDRB_IMM", "LDRH_IMM", "LDR_SP",
])
STORE_OPS = frozenset([
    "STR_REG", "STRH_REG", "STRB_REG", "STR_IMM", "STRB_IMM", "STRH_IMM",
    "STR_SP",
])
# Terminators for basic-block construction (BKPT included; it halts).
BRANCH_OPS = frozenset(["B", "BCOND", "BL", "BX", "BLX"])


def reg_name(i):
    return {13: "sp", 14: "lr", 15: "pc"}.get(i, "r%d" % i)


def reglist_text(regs):
    return "{%s}" % ", ".join(reg_name(r) for r in regs)


@dataclass(frozen=True)
class Instruction:
    addr: int
    op: str                 # internal id, e.g. "ADDS_REG"
    mnemonic: str           # display form, e.g. "ADDS" or "BNE"
    width: int              # 16 or 32 bits; 32 only for BL
    raw: int                # halfword, or (hw1 << 16) | hw2 for BL
    fields: dict = field(default_factory=dict)
    text: str = ""

    @property
    def size(self):
        return self.width // 8

    def is_terminator(self):
        """Control transfer or BKPT: ends a basic block."""
        if self.op in BRANCH_OPS or self.op == "BKPT":
            return True
        if self.op == "POP" and self.fields.get("pc"):
            return True
        if self.op in ("MOV_HI", "ADD_HI") and self.fields.get("rd") == 15:
            return True
        return False


def is_wide(hw):
    """True when hw is the first halfword of a 32-bit encoding."""
    return (hw & 0xF800) in (0xE800, 0xF000, 0xF800)


def _sign_extend(value, bits):
    if value & (1 << (bits - 1)):
        value -= 1 << bits
    return value


def _ins(addr, op, mnemonic, raw, fields, text, width=16):
    return Instruction(addr, op, mnemonic, width, raw, fields, text)


def decode(hw1, hw2=None, addr=0):
    """Decode one instruction at `addr`.

    hw2 is consulted only when hw1 opens a 32-bit encoding (BL); passing
    None for a 32-bit prefix raises UndefinedInstructionError.
    """
    if addr & 1:
        raise UndefinedInstructionError(addr, hw1, "misaligned decode")
    hw = hw1 & 0xFFFF

    if is_wide(hw):
        return _decode_wide(hw, hw2, addr)

    top5 = hw >> 11

    # 00000 / 00001 / 00010: shift by immediate (LSLS #0 is MOVS Rd, Rm)
    if top5 <= 0b00010:
        imm5 = (hw >> 6) & 0x1F
        rm = (hw >> 3) & 7
        rd = hw & 7
        if top5 == 0b00000:
            if imm5 == 0:
                return _ins(addr, "MOVS_REG", "MOVS", hw, {"rd": rd, "rm": rm},
                            "MOVS %s, %s" % (reg_name(rd), reg_name(rm)))
            return _ins(addr, "LSLS_IMM", "LSLS", hw,
                        {"rd": rd, "rm": rm, "imm": imm5},
                        "LSLS %s, %s, #%d" % (reg_name(rd), reg_name(rm), imm5))
        shift = imm5 if imm5 else 32  # encoding 0 means shift by 32
        op, mn = (("LSRS_IMM", "LSRS") if top5 == 0b00001 else ("ASRS_IMM", "ASRS"))
        return _ins(addr, op, mn, hw, {"rd": rd, "rm": rm, "imm": shift},
                    "%s %s, %s, #%d" % (mn, reg_name(rd), reg_name(rm), shift))

    # 00011: three-register / three-bit-immediate add and subtract
    if top5 == 0b00011:
        sub = (hw >> 9) & 1
        imm_form = (hw >> 10) & 1
        x = (hw >> 6) & 7
        rn = (hw >> 3) & 7
        rd = hw & 7
        if imm_form:
            op, mn = (("SUBS_IMM3", "SUBS") if sub else ("ADDS_IMM3", "ADDS"))
            return _ins(addr, op, mn, hw, {"rd": rd, "rn": rn, "imm": x},
                        "%s %s, %s, #%d" % (mn, reg_name(rd), reg_name(rn), x))
        op, mn = (("SUBS_REG", "SUBS") if sub else ("ADDS_REG", "ADDS"))
        return _ins(addr, op, mn, hw, {"rd": rd, "rn": rn, "rm": x},
                    "%s %s, %s, %s" % (mn, reg_name(rd), reg_name(rn), reg_name(x)))

    # 001xx: move/compare/add/subtract with 8-bit immediate
    if (top5 >> 2) == 0b001:
        kind = (hw >> 11) & 3
        r = (hw >> 8) & 7
        imm8 = hw & 0xFF
        op, mn = [("MOVS_IMM", "MOVS"), ("CMP_IMM", "CMP"),
                  ("ADDS_IMM8", "ADDS"), ("SUBS_IMM8", "SUBS")][kind]
        return _ins(addr, op, mn, hw, {"rd": r, "imm": imm8},
                    "%s %s, #%d" % (mn, reg_name(r), imm8))

    # 010000: register data-processing
    if (hw >> 10) == 0b010000:
        idx = (hw >> 6) & 0xF
        rm = (hw >> 3) & 7
        rdn = hw & 7
        op, mn = DP_OPS[idx], DP_MNEMONICS[idx]
        return _ins(addr, op, mn, hw, {"rd": rdn, "rm": rm},
                    "%s %s, %s" % (mn, reg_name(rdn), reg_name(rm)))

    # 010001: high-register ADD/CMP/MOV and BX/BLX
    if (hw >> 10) == 0b010001:
        kind = (hw >> 8) & 3
        rm = (hw >> 3) & 0xF
        rdn = ((hw >> 7) & 1) << 3 | (hw & 7)
        if kind == 3:
            if hw & 7:
                raise UndefinedInstructionError(addr, hw)
            if (hw >> 7) & 1:
                return _ins(addr, "BLX", "BLX", hw, {"rm": rm},
                            "BLX %s" % reg_name(rm))
            return _ins(addr, "BX", "BX", hw, {"rm": rm}, "BX %s" % reg_name(rm))
        op, mn = [("ADD_HI", "ADD"), ("CMP_HI", "CMP"), ("MOV_HI", "MOV")][kind]
        return _ins(addr, op, mn, hw, {"rd": rdn, "rm": rm},
                    "%s %s, %s" % (mn, reg_name(rdn), reg_name(rm)))

    # 01001: PC-relative literal load
    if top5 == 0b01001:
        rt = (hw >> 8) & 7
        imm = (hw & 0xFF) * 4
        lit = ((addr + 4) & ~3) + imm
        return _ins(addr, "LDR_LIT", "LDR", hw,
                    {"rt": rt, "imm": imm, "lit_addr": lit},
                    "LDR %s, [pc, #%d]" % (reg_name(rt), imm))

    # 0101: load/store with register offset
    if (hw >> 12) == 0b0101:
        kind = (hw >> 9) & 7
        rm = (hw >> 6) & 7
        rn = (hw >> 3) & 7
        rt = hw & 7
        table = [("STR_REG", "STR", 4), ("STRH_REG", "STRH", 2),
                 ("STRB_REG", "STRB", 1), ("LDRSB_REG", "LDRSB", 1),
                 ("LDR_REG", "LDR", 4), ("LDRH_REG", "LDRH", 2),
                 ("LDRB_REG", "LDRB", 1), ("LDRSH_REG", "LDRSH", 2)]
        op, mn, size = table[kind]
        return _ins(addr, op, mn, hw, {"rt": rt, "rn": rn, "rm": rm, "size": size},
                    "%s %s, [%s, %s]" % (mn, reg_name(rt), reg_name(rn), reg_name(rm)))

    # 011xx: word/byte load/store with 5-bit immediate offset
    if (hw >> 13) == 0b011:
        kind = (hw >> 11) & 3
        imm5 = (hw >> 6) & 0x1F
        rn = (hw >> 3) & 7
        rt = hw & 7
        table = [("STR_IMM", "STR", 4), ("LDR_IMM", "LDR", 4),
                 ("STRB_IMM", "STRB", 1), ("LDRB_IMM", "LDRB", 1)]
        op, mn, size = table[kind]
        imm = imm5 * size
        return _ins(addr, op, mn, hw, {"rt": rt, "rn": rn, "imm": imm, "size": size},
                    "%s %s, [%s, #%d]" % (mn, reg_name(rt), reg_name(rn), imm))

    # 1000x: halfword load/store with immediate offset
    if top5 in (0b10000, 0b10001):
        imm = ((hw >> 6) & 0x1F) * 2
        rn = (hw >> 3) & 7
        rt = hw & 7
        op, mn = (("LDRH_IMM", "LDRH") if top5 & 1 else ("STRH_IMM", "STRH"))
        return _ins(addr, op, mn, hw, {"rt": rt, "rn": rn, "imm": imm, "size": 2},
                    "%s %s, [%s, #%d]" % (mn, reg_name(rt), reg_name(rn), imm))

    # 1001x: SP-relative load/store
    if top5 in (0b10010, 0b10011):
        rt = (hw >> 8) & 7
        imm = (hw & 0xFF) * 4
        op, mn = (("LDR_SP", "LDR") if top5 & 1 else ("STR_SP", "STR"))
        return _ins(addr, op, mn, hw, {"rt": rt, "imm": imm, "size": 4},
                    "%s %s, [sp, #%d]" % (mn, reg_name(rt), imm))

    # 10100: ADR; 10101: ADD Rd, SP, #imm
    if top5 == 0b10100:
        rd = (hw >> 8) & 7
        imm = (hw & 0xFF) * 4
        tgt = ((addr + 4) & ~3) + imm
        return _ins(addr, "ADR", "ADR", hw, {"rd": rd, "imm": imm, "lit_addr": tgt},
                    "ADR %s, #%d" % (reg_name(rd), imm))
    if top5 == 0b10101:
        rd = (hw >> 8) & 7
        imm = (hw & 0xFF) * 4
        return _ins(addr, "ADD_SP_IMM8", "ADD", hw, {"rd": rd, "imm": imm},
                    "ADD %s, sp, #%d" % (reg_name(rd), imm))

    # 1011x: miscellaneous
    if (hw >> 12) == 0b1011:
        return _decode_misc(hw, addr)

    # 11000: STM; 11001: LDM
    if top5 in (0b11000, 0b11001):
        rn = (hw >> 8) & 7
        regs = [i for i in range(8) if hw & (1 << i)]
        if not regs:
            raise UndefinedInstructionError(addr, hw, "empty register list")
        if top5 == 0b11000:
            return _ins(addr, "STM", "STM", hw, {"rn": rn, "regs": regs},
                        "STM %s!, %s" % (reg_name(rn), reglist_text(regs)))
        wback = rn not in regs
        return _ins(addr, "LDM", "LDM", hw, {"rn": rn, "regs": regs, "wback": wback},
                    "LDM %s%s, %s" % (reg_name(rn), "!" if wback else "",
                                      reglist_text(regs)))

    # 1101x: conditional branch, UDF, SVC
    if (hw >> 12) == 0b1101:
        cond = (hw >> 8) & 0xF
        if cond == 0xE:
            raise UndefinedInstructionError(addr, hw, "permanently undefined")
        if cond == 0xF:
            raise UndefinedInstructionError(addr, hw, "SVC not supported")
        offset = _sign_extend(hw & 0xFF, 8) * 2
        target = (addr + 4 + offset) & 0xFFFFFFFF
        mn = "B" + COND_NAMES[cond]
        return _ins(addr, "BCOND", mn, hw, {"cond": cond, "target": target},
                    "%s 0x%08x" % (mn, target))

    # 11100: unconditional branch
    if top5 == 0b11100:
        offset = _sign_extend(hw & 0x7FF, 11) * 2
        target = (addr + 4 + offset) & 0xFFFFFFFF
        return _ins(addr, "B", "B", hw, {"target": target}, "B 0x%08x" % target)

    raise UndefinedInstructionError(addr, hw)


def _decode_misc(hw, addr):
    sub = (hw >> 8) & 0xF
    if sub == 0x0:
        imm = (hw & 0x7F) * 4
        if hw & 0x80:
            return _ins(addr, "SUB_SP_IMM7", "SUB", hw, {"imm": imm},
                        "SUB sp, #%d" % imm)
        return _ins(addr, "ADD_SP_IMM7", "ADD", hw, {"imm": imm},
                    "ADD sp, #%d" % imm)
    if sub == 0x2:
        kind = (hw >> 6) & 3
        rm = (hw >> 3) & 7
        rd = hw & 7
        op = ["SXTH", "SXTB", "UXTH", "UXTB"][kind]
        return _ins(addr, op, op, hw, {"rd": rd, "rm": rm},
                    "%s %s, %s" % (op, reg_name(rd), reg_name(rm)))
    if sub in (0x4, 0x5):
        regs = [i for i in range(8) if hw & (1 << i)]
        if sub == 0x5:
            regs.append(14)
        if not regs:
            raise UndefinedInstructionError(addr, hw, "empty register list")
        return _ins(addr, "PUSH", "PUSH", hw, {"regs": regs},
                    "PUSH %s" % reglist_text(regs))
    if sub == 0xA:
        kind = (hw >> 6) & 3
        rm = (hw >> 3) & 7
        rd = hw & 7
        if kind == 0b10:
            raise UndefinedInstructionError(addr, hw)
        op = {0b00: "REV", 0b01: "REV16", 0b11: "REVSH"}[kind]
        return _ins(addr, op, op, hw, {"rd": rd, "rm": rm},
                    "%s %s, %s" % (op, reg_name(rd), reg_name(rm)))
    if sub in (0xC, 0xD):
        regs = [i for i in range(8) if hw & (1 << i)]
        pc = sub == 0xD
        shown = regs + ([15] if pc else [])
        if not shown:
            raise UndefinedInstructionError(addr, hw, "empty register list")
        return _ins(addr, "POP", "POP", hw, {"regs": regs, "pc": pc},
                    "POP %s" % reglist_text(shown))
    if sub == 0xE:
        imm = hw & 0xFF
        return _ins(addr, "BKPT", "BKPT", hw, {"imm": imm}, "BKPT #%d" % imm)
    if sub == 0xF:
        if hw & 0xF:
            raise UndefinedInstructionError(addr, hw)
        name = HINT_NAMES.get((hw >> 4) & 0xF)
        if name is None:
            raise UndefinedInstructionError(addr, hw)
        return _ins(addr, "HINT", name, hw, {}, name)
    raise UndefinedInstructionError(addr, hw)


def _decode_wide(hw1, hw2, addr):
    if hw2 is None:
        raise UndefinedInstructionError(addr, hw1, "truncated 32-bit encoding")
    raw = (hw1 << 16) | (hw2 & 0xFFFF)
    # BL: hw1 = 11110 S imm10, hw2 = 11 J1 1 J2 imm11
    if (hw1 & 0xF800) == 0xF000 and (hw2 & 0xD000) == 0xD000:
        s = (hw1 >> 10) & 1
        imm10 = hw1 & 0x3FF
        j1 = (hw2 >> 13) & 1
        j2 = (hw2 >> 11) & 1
        imm11 = hw2 & 0x7FF
        i1 = (~(j1 ^ s)) & 1
        i2 = (~(j2 ^ s)) & 1
        imm = (s << 24) | (i1 << 23) | (i2 << 22) | (imm10 << 12) | (imm11 << 1)
        imm = _sign_extend(imm, 25)
        target = (addr + 4 + imm) & 0xFFFFFFFF
        return Instruction(addr, "BL", "BL", 32, raw, {"target": target},
                           "BL 0x%08x" % target)
    raise UndefinedInstructionError(addr, hw1, "unsupported 32-bit encoding")
