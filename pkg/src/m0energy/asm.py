"""Tiny two-pass assembler for building flat test binaries.

Produces images in the layout the simulator loads: an 8-byte vector table
(initial SP, reset vector) followed by code at flash_base + 8.  Labels are
resolved on the second pass; literal words are emitted with .word() and
referenced by ldr_lit()/adr().  Only the encodings the simulator executes
are provided; there is no macro layer.
"""

from .errors import M0EnergyError

COND_CODES = {"eq": 0, "ne": 1, "cs": 2, "cc": 3, "mi": 4, "pl": 5,
              "vs": 6, "vc": 7, "hi": 8, "ls": 9, "ge": 10, "lt": 11,
              "gt": 12, "le": 13}


class AsmError(M0EnergyError):
    pass


def _check_low(*regs):
    for r in regs:
        if not 0 <= r <= 7:
            raise AsmError("low register required, got r%d" % r)


def _reglist_bits(regs):
    bits = 0
    for r in regs:
        _check_low(r)
        bits |= 1 << r
    if bits == 0:
        raise AsmError("empty register list")
    return bits


class Assembler:
    def __init__(self, flash_base=0x08000000, sp_init=0x20002000, entry=None):
        self.flash_base = flash_base
        self.sp_init = sp_init
        self.entry = entry  # label or address; default: first code halfword
        self.items = []     # (kind, payload); kinds: hw, fixup, bl, word, align, label

    # -- layout ---------------------------------------------------------

    def label(self, name):
        self.items.append(("label", name))
        return self

    def raw(self, hw):
        self.items.append(("hw", hw & 0xFFFF))
        return self

    def word(self, value, label=None):
        # label binds to the word itself, after any alignment padding
        self.items.append(("word", (value & 0xFFFFFFFF, label)))
        return self

    def _fixup(self, encode):
        # encode(addr, labels) -> halfword, resolved on pass 2
        self.items.append(("fixup", encode))
        return self

    def _resolve(self, target, labels):
        if isinstance(target, str):
            if target not in labels:
                raise AsmError("undefined label %r" % target)
            return labels[target]
        return target

    # -- data processing --------------------------------------------------

    def movs(self, rd, imm8):
        return self.raw(0x2000 | rd << 8 | (imm8 & 0xFF))

    def movs_reg(self, rd, rm):
        _check_low(rd, rm)
        return self.raw(rm << 3 | rd)

    def mov_hi(self, rd, rm):
        return self.raw(0x4600 | (rd >> 3) << 7 | rm << 3 | (rd & 7))

    def adds_reg(self, rd, rn, rm):
        _check_low(rd, rn, rm)
        return self.raw(0x1800 | rm << 6 | rn << 3 | rd)

    def subs_reg(self, rd, rn, rm):
        _check_low(rd, rn, rm)
        return self.raw(0x1A00 | rm << 6 | rn << 3 | rd)

    def adds_imm3(self, rd, rn, imm3):
        return self.raw(0x1C00 | imm3 << 6 | rn << 3 | rd)

    def subs_imm3(self, rd, rn, imm3):
        return self.raw(0x1E00 | imm3 << 6 | rn << 3 | rd)

    def adds_imm8(self, rdn, imm8):
        return self.raw(0x3000 | rdn << 8 | (imm8 & 0xFF))

    def subs_imm8(self, rdn, imm8):
        return self.raw(0x3800 | rdn << 8 | (imm8 & 0xFF))

    def cmp_imm(self, rn, imm8):
        return self.raw(0x2800 | rn << 8 | (imm8 & 0xFF))

    def add_hi(self, rdn, rm):
        return self.raw(0x4400 | (rdn >> 3) << 7 | rm << 3 | (rdn & 7))

    def cmp_hi(self, rn, rm):
        return self.raw(0x4500 | (rn >> 3) << 7 | rm << 3 | (rn & 7))

    def _dp(self, op, rdn, rm):
        _check_low(rdn, rm)
        return self.raw(0x4000 | op << 6 | rm << 3 | rdn)

    def ands(self, rdn, rm):
        return self._dp(0, rdn, rm)

    def eors(self, rdn, rm):
        return self._dp(1, rdn, rm)

    def lsls_reg(self, rdn, rm):
        return self._dp(2, rdn, rm)

    def lsrs_reg(self, rdn, rm):
        return self._dp(3, rdn, rm)

    def asrs_reg(self, rdn, rm):
        return self._dp(4, rdn, rm)

    def adcs(self, rdn, rm):
        return self._dp(5, rdn, rm)

    def sbcs(self, rdn, rm):
        return self._dp(6, rdn, rm)

    def rors(self, rdn, rm):
        return self._dp(7, rdn, rm)

    def tst(self, rn, rm):
        return self._dp(8, rn, rm)

    def rsbs(self, rd, rn):
        return self._dp(9, rd, rn)

    def cmp_reg(self, rn, rm):
        return self._dp(10, rn, rm)

    def cmn(self, rn, rm):
        return self._dp(11, rn, rm)

    def orrs(self, rdn, rm):
        return self._dp(12, rdn, rm)

    def muls(self, rdn, rm):
        return self._dp(13, rdn, rm)

    def bics(self, rdn, rm):
        return self._dp(14, rdn, rm)

    def mvns(self, rd, rm):
        return self._dp(15, rd, rm)

    def lsls_imm(self, rd, rm, imm5):
        if imm5 == 0:
            raise AsmError("LSLS #0 is MOVS; use movs_reg")
        return self.raw(imm5 << 6 | rm << 3 | rd)

    def lsrs_imm(self, rd, rm, imm5):
        return self.raw(0x0800 | (imm5 & 0x1F) << 6 | rm << 3 | rd)

    def asrs_imm(self, rd, rm, imm5):
        return self.raw(0x1000 | (imm5 & 0x1F) << 6 | rm << 3 | rd)

    def sxth(self, rd, rm):
        return self.raw(0xB200 | rm << 3 | rd)

    def sxtb(self, rd, rm):
        return self.raw(0xB240 | rm << 3 | rd)

    def uxth(self, rd, rm):
        return self.raw(0xB280 | rm << 3 | rd)

    def uxtb(self, rd, rm):
        return self.raw(0xB2C0 | rm << 3 | rd)

    def rev(self, rd, rm):
        return self.raw(0xBA00 | rm << 3 | rd)

    def rev16(self, rd, rm):
        return self.raw(0xBA40 | rm << 3 | rd)

    def revsh(self, rd, rm):
        return self.raw(0xBAC0 | rm << 3 | rd)

    def nop(self):
        return self.raw(0xBF00)

    # -- memory -----------------------------------------------------------

    def ldr_lit(self, rt, target):
        def enc(addr, labels):
            lit = self._resolve(target, labels)
            off = lit - ((addr + 4) & ~3)
            if off < 0 or off > 1020 or off % 4:
                raise AsmError("literal out of range at 0x%08x" % addr)
            return 0x4800 | rt << 8 | off // 4
        return self._fixup(enc)

    def adr(self, rd, target):
        def enc(addr, labels):
            tgt = self._resolve(target, labels)
            off = tgt - ((addr + 4) & ~3)
            if off < 0 or off > 1020 or off % 4:
                raise AsmError("adr target out of range at 0x%08x" % addr)
            return 0xA000 | rd << 8 | off // 4
        return self._fixup(enc)

    def str_imm(self, rt, rn, off=0):
        return self.raw(0x6000 | (off // 4) << 6 | rn << 3 | rt)

    def ldr_imm(self, rt, rn, off=0):
        return self.raw(0x6800 | (off // 4) << 6 | rn << 3 | rt)

    def strb_imm(self, rt, rn, off=0):
        return self.raw(0x7000 | off << 6 | rn << 3 | rt)

    def ldrb_imm(self, rt, rn, off=0):
        return self.raw(0x7800 | off << 6 | rn << 3 | rt)

    def strh_imm(self, rt, rn, off=0):
        return self.raw(0x8000 | (off // 2) << 6 | rn << 3 | rt)

    def ldrh_imm(self, rt, rn, off=0):
        return self.raw(0x8800 | (off // 2) << 6 | rn << 3 | rt)

    def str_reg(self, rt, rn, rm):
        return self.raw(0x5000 | rm << 6 | rn << 3 | rt)

    def strh_reg(self, rt, rn, rm):
        return self.raw(0x5200 | rm << 6 | rn << 3 | rt)

    def strb_reg(self, rt, rn, rm):
        return self.raw(0x5400 | rm << 6 | rn << 3 | rt)

    def ldrsb_reg(self, rt, rn, rm):
        return self.raw(0x5600 | rm << 6 | rn << 3 | rt)

    def ldr_reg(self, rt, rn, rm):
        return self.raw(0x5800 | rm << 6 | rn << 3 | rt)

    def ldrh_reg(self, rt, rn, rm):
        return self.raw(0x5A00 | rm << 6 | rn << 3 | rt)

    def ldrb_reg(self, rt, rn, rm):
        return self.raw(0x5C00 | rm << 6 | rn << 3 | rt)

    def ldrsh_reg(self, rt, rn, rm):
        return self.raw(0x5E00 | rm << 6 | rn << 3 | rt)

    def str_sp(self, rt, off=0):
        return self.raw(0x9000 | rt << 8 | off // 4)

    def ldr_sp(self, rt, off=0):
        return self.raw(0x9800 | rt << 8 | off // 4)

    def add_sp(self, imm):
        return self.raw(0xB000 | imm // 4)

    def sub_sp(self, imm):
        return self.raw(0xB080 | imm // 4)

    def add_sp_imm8(self, rd, imm):
        return self.raw(0xA800 | rd << 8 | imm // 4)

    def push(self, regs, lr=False):
        bits = _reglist_bits(regs) if regs else 0
        if not regs and not lr:
            raise AsmError("empty register list")
        return self.raw(0xB400 | (0x100 if lr else 0) | bits)

    def pop(self, regs, pc=False):
        bits = _reglist_bits(regs) if regs else 0
        if not regs and not pc:
            raise AsmError("empty register list")
        return self.raw(0xBC00 | (0x100 if pc else 0) | bits)

    def stm(self, rn, regs):
        return self.raw(0xC000 | rn << 8 | _reglist_bits(regs))

    def ldm(self, rn, regs):
        return self.raw(0xC800 | rn << 8 | _reglist_bits(regs))

    # -- control flow -------------------------------------------------------

    def b(self, target, cond=None):
        code = COND_CODES[cond] if cond else None

        def enc(addr, labels):
            off = self._resolve(target, labels) - (addr + 4)
            if off % 2:
                raise AsmError("odd branch offset")
            if code is None:
                if not -2048 <= off <= 2046:
                    raise AsmError("B out of range at 0x%08x" % addr)
                return 0xE000 | (off >> 1) & 0x7FF
            if not -256 <= off <= 254:
                raise AsmError("B<cond> out of range at 0x%08x" % addr)
            return 0xD000 | code << 8 | (off >> 1) & 0xFF
        return self._fixup(enc)

    def beq(self, target):
        return self.b(target, "eq")

    def bne(self, target):
        return self.b(target, "ne")

    def bl(self, target):
        self.items.append(("bl", target))
        return self

    def bx(self, rm):
        return self.raw(0x4700 | rm << 3)

    def blx(self, rm):
        return self.raw(0x4780 | rm << 3)

    def bkpt(self, imm=0):
        return self.raw(0xBE00 | (imm & 0xFF))

    def udf(self):
        return self.raw(0xDE00)

    # -- assembly ----------------------------------------------------------

    def _encode_bl(self, addr, target, labels):
        off = self._resolve(target, labels) - (addr + 4)
        if off % 2 or not -(1 << 24) <= off < (1 << 24):
            raise AsmError("BL out of range at 0x%08x" % addr)
        s = (off >> 24) & 1
        i1 = (off >> 23) & 1
        i2 = (off >> 22) & 1
        imm10 = (off >> 12) & 0x3FF
        imm11 = (off >> 1) & 0x7FF
        j1 = (~(i1 ^ s)) & 1
        j2 = (~(i2 ^ s)) & 1
        hw1 = 0xF000 | s << 10 | imm10
        hw2 = 0xD000 | j1 << 13 | j2 << 11 | imm11
        return hw1, hw2

    def image(self):
        """Assemble and return the flat binary (vector table + code)."""
        base = self.flash_base + 8
        # pass 1: sizes and label addresses
        labels = {}
        addr = base
        sized = []
        for kind, payload in self.items:
            if kind == "label":
                labels[payload] = addr
                continue
            if kind == "word":
                value, name = payload
                pad = (-addr) % 4
                sized.append((addr, "pad", pad))
                addr += pad
                if name:
                    labels[name] = addr
                sized.append((addr, "word", value))
                addr += 4
                continue
            if kind == "bl":
                sized.append((addr, "bl", payload))
                addr += 4
                continue
            sized.append((addr, kind, payload))
            addr += 2

        # pass 2: encode
        out = bytearray()
        entry = self._resolve(self.entry, labels) if self.entry is not None else base
        out += self.sp_init.to_bytes(4, "little")
        out += (entry | 1).to_bytes(4, "little")
        for addr, kind, payload in sized:
            if kind == "hw":
                out += payload.to_bytes(2, "little")
            elif kind == "fixup":
                out += payload(addr, labels).to_bytes(2, "little")
            elif kind == "bl":
                hw1, hw2 = self._encode_bl(addr, payload, labels)
                out += hw1.to_bytes(2, "little") + hw2.to_bytes(2, "little")
            elif kind == "word":
                out += payload.to_bytes(4, "little")
            elif kind == "pad":
                out += b"\x00" * payload
        return bytes(out)
