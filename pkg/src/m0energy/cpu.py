"""Cortex-M0 core: architectural state, instruction execution, timing.

Base cycle costs before memory stalls (data-driven, override via the
`timing` argument):

    data processing            1
    MULS                       1   (single-cycle multiplier; set "muls": 32
                                    for the slow multiplier variant)
    load/store                 2
    LDM/STM/PUSH/POP           1 + N   (N = words transferred; POP into pc
                                        uses the same 1 + N)
    branch taken               3
    branch not taken           1
    BL                         4
    BX / BLX                   3
    MOV/ADD with pc target     3
    BKPT                       1   (counts as an executed instruction,
                                    then halts)

Fetch and Flash data stalls from the memory system are added on top.
A simulator instance is single-threaded; distinct instances are
independent.
"""

from dataclasses import dataclass, field

from . import decode as dec
from .counters import EventCounters
from .errors import M0EnergyError, MemoryFault
from .memory import (DEFAULT_FLASH_SIZE, DEFAULT_RAM_SIZE, MemorySystem)

MASK32 = 0xFFFFFFFF

DEFAULT_TIMING = {
    "dp": 1,
    "load": 2,
    "store": 2,
    "block_base": 1,
    "branch_taken": 3,
    "branch_not_taken": 1,
    "bl": 4,
    "bx": 3,
    "blx": 3,
    "muls": 1,
    "pc_branch": 3,
    "bkpt": 1,
}


@dataclass
class CpuState:
    regs: list = field(default_factory=lambda: [0] * 16)
    n: bool = False
    z: bool = False
    c: bool = False
    v: bool = False
    halted: bool = False
    cycle_count: int = 0

    @property
    def sp(self):
        return self.regs[13]

    @property
    def lr(self):
        return self.regs[14]

    @property
    def pc(self):
        return self.regs[15]

    @pc.setter
    def pc(self, value):
        self.regs[15] = value & MASK32 & ~1


@dataclass
class StepResult:
    instruction: dec.Instruction
    cycles: int
    branch_taken: bool
    data_accesses: list
    halted: bool
    fetch_stall: int = 0


@dataclass
class RunSummary:
    counters: EventCounters
    cycle_count: int
    exit_reason: str
    steps: int = 0


def _add_with_carry(a, b, carry_in):
    a &= MASK32
    b &= MASK32
    total = a + b + carry_in
    result = total & MASK32
    carry = total > MASK32
    overflow = bool(~(a ^ b) & (a ^ result) & 0x80000000)
    return result, carry, overflow


def _cond_passed(cond, s):
    if cond == 0:
        return s.z
    if cond == 1:
        return not s.z
    if cond == 2:
        return s.c
    if cond == 3:
        return not s.c
    if cond == 4:
        return s.n
    if cond == 5:
        return not s.n
    if cond == 6:
        return s.v
    if cond == 7:
        return not s.v
    if cond == 8:
        return s.c and not s.z
    if cond == 9:
        return not s.c or s.z
    if cond == 10:
        return s.n == s.v
    if cond == 11:
        return s.n != s.v
    if cond == 12:
        return not s.z and s.n == s.v
    return s.z or s.n != s.v  # LE


class Simulator:
    """One simulated core plus its memory and event counters."""

    def __init__(self, image, wait_states=0, prefetch=False,
                 flash_size=DEFAULT_FLASH_SIZE, ram_size=DEFAULT_RAM_SIZE,
                 timing=None):
        self.mem = MemorySystem(image, flash_size=flash_size,
                                ram_size=ram_size, wait_states=wait_states,
                                prefetch=prefetch)
        self.timing = dict(DEFAULT_TIMING)
        if timing:
            self.timing.update(timing)
        self.counters = EventCounters()
        self.state = CpuState()
        self._decode_cache = {}
        self._sequential = False
        self.reset()

    # -- lifecycle ----------------------------------------------------------

    def reset(self):
        """Load SP and PC from the vector table; zero flags and counters."""
        sp, pc = self.mem.reset_vector()
        self.state = CpuState()
        self.state.regs[13] = sp
        self.state.regs[15] = pc
        self.counters.reset()
        self.mem.fetch_unit.flush()
        self.mem.debug_output.clear()
        self._sequential = False

    # -- register helpers ---------------------------------------------------

    def _rget(self, i):
        if i == 15:
            return (self.state.regs[15] + 4) & MASK32
        return self.state.regs[i]

    def _rset(self, i, value):
        self.state.regs[i] = value & MASK32

    def _set_nz(self, result):
        self.state.n = bool(result & 0x80000000)
        self.state.z = result == 0

    # -- memory helpers (collect accesses and stalls per step) --------------

    def _read(self, addr, size):
        value, stall, region = self.mem.read(addr & MASK32, size)
        self._accesses.append((addr & MASK32, size, "r", region))
        self._data_stall += stall
        return value

    def _write(self, addr, size, value):
        stall, region = self.mem.write(addr & MASK32, size, value)
        self._accesses.append((addr & MASK32, size, "w", region))
        self._data_stall += stall

    def _branch(self, target):
        self.state.pc = target
        self._branched = True

    # -- stepping -------------------------------------------------------------

    def _decode_at(self, addr, now):
        hw1, stall = self.mem.fetch(addr, now, self._sequential)
        fetch_stall = stall
        cacheable = self.mem.region(addr) != "ram"
        cached = self._decode_cache.get(addr) if cacheable else None
        if cached is not None and not dec.is_wide(hw1):
            return cached, fetch_stall
        hw2 = None
        if dec.is_wide(hw1):
            hw2, stall2 = self.mem.fetch(addr + 2, now + stall, True)
            fetch_stall += stall2
            if cached is not None:
                return cached, fetch_stall
        ins = dec.decode(hw1, hw2, addr)
        if cacheable:
            self._decode_cache[addr] = ins
        return ins, fetch_stall

    def step(self):
        """Execute one instruction; returns its StepResult."""
        s = self.state
        if s.halted:
            raise M0EnergyError("cannot step a halted core")
        addr = s.regs[15]
        ins, fetch_stall = self._decode_at(addr, s.cycle_count)

        self._accesses = []
        self._data_stall = 0
        self._branched = False
        taken = bool(HANDLERS[ins.op](self, ins))

        base = self._base_cycles(ins, taken, len(self._accesses))
        cycles = fetch_stall + base + self._data_stall
        if not self._branched:
            s.regs[15] = (addr + ins.size) & MASK32
        s.cycle_count += cycles
        self._sequential = not taken

        step = StepResult(ins, cycles, taken, self._accesses, s.halted,
                          fetch_stall)
        self.counters.record_step(step)
        return step

    def run(self, max_cycles=10 ** 9, on_step=None):
        """Step until halt, fault, or cycle budget; never raises mid-run."""
        steps = 0
        exit_reason = None
        while True:
            if self.state.halted:
                exit_reason = "halt"
                break
            if self.state.cycle_count >= max_cycles:
                exit_reason = "cycle-budget"
                break
            try:
                result = self.step()
            except M0EnergyError as exc:
                exit_reason = "fault: %s" % exc
                break
            steps += 1
            if on_step is not None:
                on_step(result)
        return RunSummary(self.counters.snapshot(), self.state.cycle_count,
                          exit_reason, steps)

    def _base_cycles(self, ins, taken, n_transfer):
        t = self.timing
        op = ins.op
        if op in dec.LOAD_OPS:
            return t["load"]
        if op in dec.STORE_OPS:
            return t["store"]
        if op in ("PUSH", "POP", "LDM", "STM"):
            return t["block_base"] + n_transfer
        if op == "BCOND":
            return t["branch_taken"] if taken else t["branch_not_taken"]
        if op == "B":
            return t["branch_taken"]
        if op == "BL":
            return t["bl"]
        if op == "BX":
            return t["bx"]
        if op == "BLX":
            return t["blx"]
        if op == "MULS":
            return t["muls"]
        if op == "BKPT":
            return t["bkpt"]
        if taken:
            return t["pc_branch"]  # MOV/ADD writing pc
        return t["dp"]


# -- instruction handlers -----------------------------------------------
# Each takes (sim, ins) and returns truthy when a branch was taken.

def _h_movs_imm(sim, ins):
    f = ins.fields
    sim._rset(f["rd"], f["imm"])
    sim._set_nz(f["imm"])


def _h_movs_reg(sim, ins):
    v = sim._rget(ins.fields["rm"])
    sim._rset(ins.fields["rd"], v)
    sim._set_nz(v)


def _h_mov_hi(sim, ins):
    f = ins.fields
    v = sim._rget(f["rm"])
    if f["rd"] == 15:
        sim._branch(v & ~1)
        return True
    sim._rset(f["rd"], v)


def _h_add_hi(sim, ins):
    f = ins.fields
    v = (sim._rget(f["rd"]) + sim._rget(f["rm"])) & MASK32
    if f["rd"] == 15:
        sim._branch(v & ~1)
        return True
    sim._rset(f["rd"], v)


def _h_cmp_hi(sim, ins):
    f = ins.fields
    res, c, v = _add_with_carry(sim._rget(f["rd"]), ~sim._rget(f["rm"]), 1)
    sim._set_nz(res)
    sim.state.c = c
    sim.state.v = v


def _shift_lsl(value, amount):
    if amount == 0:
        return value, None
    if amount < 32:
        full = value << amount
        return full & MASK32, bool(full & (1 << 32))
    if amount == 32:
        return 0, bool(value & 1)
    return 0, False


def _shift_lsr(value, amount):
    if amount == 0:
        return value, None
    if amount < 32:
        return (value >> amount) & MASK32, bool((value >> (amount - 1)) & 1)
    if amount == 32:
        return 0, bool(value >> 31)
    return 0, False


def _shift_asr(value, amount):
    if amount == 0:
        return value, None
    sign = bool(value & 0x80000000)
    if amount < 32:
        result = value >> amount
        if sign:
            result |= (MASK32 << (32 - amount)) & MASK32
        return result & MASK32, bool((value >> (amount - 1)) & 1)
    return (MASK32 if sign else 0), sign


def _shift_ror(value, amount):
    if amount == 0:
        return value, None
    m = amount % 32
    if m == 0:
        return value, bool(value >> 31)
    result = ((value >> m) | (value << (32 - m))) & MASK32
    return result, bool(result >> 31)


def _apply_shift(sim, ins, shifter, amount):
    # immediate forms shift rm into rd; register forms shift rd in place
    f = ins.fields
    value = sim._rget(f["rm"]) if "imm" in f else sim._rget(f["rd"])
    result, carry = shifter(value, amount)
    sim._rset(f["rd"], result)
    sim._set_nz(result)
    if carry is not None:
        sim.state.c = carry


def _h_lsls_imm(sim, ins):
    _apply_shift(sim, ins, _shift_lsl, ins.fields["imm"])


def _h_lsrs_imm(sim, ins):
    _apply_shift(sim, ins, _shift_lsr, ins.fields["imm"])


def _h_asrs_imm(sim, ins):
    _apply_shift(sim, ins, _shift_asr, ins.fields["imm"])


def _h_lsls_reg(sim, ins):
    _apply_shift(sim, ins, _shift_lsl, sim._rget(ins.fields["rm"]) & 0xFF)


def _h_lsrs_reg(sim, ins):
    _apply_shift(sim, ins, _shift_lsr, sim._rget(ins.fields["rm"]) & 0xFF)


def _h_asrs_reg(sim, ins):
    _apply_shift(sim, ins, _shift_asr, sim._rget(ins.fields["rm"]) & 0xFF)


def _h_rors(sim, ins):
    _apply_shift(sim, ins, _shift_ror, sim._rget(ins.fields["rm"]) & 0xFF)


def _arith(sim, rd, a, b, carry_in, writeback=True):
    result, c, v = _add_with_carry(a, b, carry_in)
    if writeback:
        sim._rset(rd, result)
    sim._set_nz(result)
    sim.state.c = c
    sim.state.v = v


def _h_adds_reg(sim, ins):
    f = ins.fields
    _arith(sim, f["rd"], sim._rget(f["rn"]), sim._rget(f["rm"]), 0)


def _h_subs_reg(sim, ins):
    f = ins.fields
    _arith(sim, f["rd"], sim._rget(f["rn"]), ~sim._rget(f["rm"]), 1)


def _h_adds_imm3(sim, ins):
    f = ins.fields
    _arith(sim, f["rd"], sim._rget(f["rn"]), f["imm"], 0)


def _h_subs_imm3(sim, ins):
    f = ins.fields
    _arith(sim, f["rd"], sim._rget(f["rn"]), ~f["imm"], 1)


def _h_adds_imm8(sim, ins):
    f = ins.fields
    _arith(sim, f["rd"], sim._rget(f["rd"]), f["imm"], 0)


def _h_subs_imm8(sim, ins):
    f = ins.fields
    _arith(sim, f["rd"], sim._rget(f["rd"]), ~f["imm"], 1)


def _h_cmp_imm(sim, ins):
    f = ins.fields
    _arith(sim, 0, sim._rget(f["rd"]), ~f["imm"], 1, writeback=False)


def _h_cmp_reg(sim, ins):
    f = ins.fields
    _arith(sim, 0, sim._rget(f["rd"]), ~sim._rget(f["rm"]), 1, writeback=False)


def _h_cmn(sim, ins):
    f = ins.fields
    _arith(sim, 0, sim._rget(f["rd"]), sim._rget(f["rm"]), 0, writeback=False)


def _h_adcs(sim, ins):
    f = ins.fields
    _arith(sim, f["rd"], sim._rget(f["rd"]), sim._rget(f["rm"]),
           1 if sim.state.c else 0)


def _h_sbcs(sim, ins):
    f = ins.fields
    _arith(sim, f["rd"], sim._rget(f["rd"]), ~sim._rget(f["rm"]),
           1 if sim.state.c else 0)


def _h_rsbs(sim, ins):
    f = ins.fields
    _arith(sim, f["rd"], ~sim._rget(f["rm"]), 0, 1)


def _logic(sim, ins, fn, writeback=True):
    f = ins.fields
    result = fn(sim._rget(f["rd"]), sim._rget(f["rm"])) & MASK32
    if writeback:
        sim._rset(f["rd"], result)
    sim._set_nz(result)


def _h_ands(sim, ins):
    _logic(sim, ins, lambda a, b: a & b)


def _h_eors(sim, ins):
    _logic(sim, ins, lambda a, b: a ^ b)


def _h_orrs(sim, ins):
    _logic(sim, ins, lambda a, b: a | b)


def _h_bics(sim, ins):
    _logic(sim, ins, lambda a, b: a & ~b)


def _h_mvns(sim, ins):
    _logic(sim, ins, lambda a, b: ~b)


def _h_tst(sim, ins):
    _logic(sim, ins, lambda a, b: a & b, writeback=False)


def _h_muls(sim, ins):
    f = ins.fields
    result = (sim._rget(f["rd"]) * sim._rget(f["rm"])) & MASK32
    sim._rset(f["rd"], result)
    sim._set_nz(result)


def _h_adr(sim, ins):
    sim._rset(ins.fields["rd"], ins.fields["lit_addr"])


def _h_add_sp_imm8(sim, ins):
    sim._rset(ins.fields["rd"], sim._rget(13) + ins.fields["imm"])


def _h_add_sp_imm7(sim, ins):
    sim._rset(13, sim._rget(13) + ins.fields["imm"])


def _h_sub_sp_imm7(sim, ins):
    sim._rset(13, sim._rget(13) - ins.fields["imm"])


def _h_sxth(sim, ins):
    v = sim._rget(ins.fields["rm"]) & 0xFFFF
    sim._rset(ins.fields["rd"], v - 0x10000 if v & 0x8000 else v)


def _h_sxtb(sim, ins):
    v = sim._rget(ins.fields["rm"]) & 0xFF
    sim._rset(ins.fields["rd"], v - 0x100 if v & 0x80 else v)


def _h_uxth(sim, ins):
    sim._rset(ins.fields["rd"], sim._rget(ins.fields["rm"]) & 0xFFFF)


def _h_uxtb(sim, ins):
    sim._rset(ins.fields["rd"], sim._rget(ins.fields["rm"]) & 0xFF)


def _h_rev(sim, ins):
    v = sim._rget(ins.fields["rm"])
    out = int.from_bytes(v.to_bytes(4, "little"), "big")
    sim._rset(ins.fields["rd"], out)


def _h_rev16(sim, ins):
    v = sim._rget(ins.fields["rm"])
    out = ((v & 0x00FF00FF) << 8) | ((v & 0xFF00FF00) >> 8)
    sim._rset(ins.fields["rd"], out)


def _h_revsh(sim, ins):
    v = sim._rget(ins.fields["rm"])
    half = ((v & 0xFF) << 8) | ((v >> 8) & 0xFF)
    sim._rset(ins.fields["rd"], half - 0x10000 if half & 0x8000 else half)


def _h_hint(sim, ins):
    pass


def _h_bkpt(sim, ins):
    sim.state.halted = True


# loads and stores

def _h_ldr_lit(sim, ins):
    f = ins.fields
    sim._rset(f["rt"], sim._read(f["lit_addr"], 4))


def _ea_imm(sim, f):
    return (sim._rget(f["rn"]) + f["imm"]) & MASK32


def _ea_reg(sim, f):
    return (sim._rget(f["rn"]) + sim._rget(f["rm"])) & MASK32


def _load(sim, f, ea, size, signed=False):
    v = sim._read(ea, size)
    if signed:
        top = 1 << (8 * size - 1)
        if v & top:
            v -= 1 << (8 * size)
    sim._rset(f["rt"], v)


def _h_ldr_imm(sim, ins):
    _load(sim, ins.fields, _ea_imm(sim, ins.fields), 4)


def _h_ldrb_imm(sim, ins):
    _load(sim, ins.fields, _ea_imm(sim, ins.fields), 1)


def _h_ldrh_imm(sim, ins):
    _load(sim, ins.fields, _ea_imm(sim, ins.fields), 2)


def _h_ldr_reg(sim, ins):
    _load(sim, ins.fields, _ea_reg(sim, ins.fields), 4)


def _h_ldrb_reg(sim, ins):
    _load(sim, ins.fields, _ea_reg(sim, ins.fields), 1)


def _h_ldrh_reg(sim, ins):
    _load(sim, ins.fields, _ea_reg(sim, ins.fields), 2)


def _h_ldrsb_reg(sim, ins):
    _load(sim, ins.fields, _ea_reg(sim, ins.fields), 1, signed=True)


def _h_ldrsh_reg(sim, ins):
    _load(sim, ins.fields, _ea_reg(sim, ins.fields), 2, signed=True)


def _h_ldr_sp(sim, ins):
    f = ins.fields
    _load(sim, f, (sim._rget(13) + f["imm"]) & MASK32, 4)


def _h_str_imm(sim, ins):
    f = ins.fields
    sim._write(_ea_imm(sim, f), 4, sim._rget(f["rt"]))


def _h_strb_imm(sim, ins):
    f = ins.fields
    sim._write(_ea_imm(sim, f), 1, sim._rget(f["rt"]))


def _h_strh_imm(sim, ins):
    f = ins.fields
    sim._write(_ea_imm(sim, f), 2, sim._rget(f["rt"]))


def _h_str_reg(sim, ins):
    f = ins.fields
    sim._write(_ea_reg(sim, f), 4, sim._rget(f["rt"]))


def _h_strb_reg(sim, ins):
    f = ins.fields
    sim._write(_ea_reg(sim, f), 1, sim._rget(f["rt"]))


def _h_strh_reg(sim, ins):
    f = ins.fields
    sim._write(_ea_reg(sim, f), 2, sim._rget(f["rt"]))


def _h_str_sp(sim, ins):
    f = ins.fields
    sim._write((sim._rget(13) + f["imm"]) & MASK32, 4, sim._rget(f["rt"]))


def _h_push(sim, ins):
    regs = ins.fields["regs"]
    addr = (sim._rget(13) - 4 * len(regs)) & MASK32
    sim._rset(13, addr)
    for i, r in enumerate(regs):
        sim._write(addr + 4 * i, 4, sim._rget(r))


def _h_pop(sim, ins):
    f = ins.fields
    regs = list(f["regs"])
    count = len(regs) + (1 if f["pc"] else 0)
    addr = sim._rget(13)
    for i, r in enumerate(regs):
        sim._rset(r, sim._read(addr + 4 * i, 4))
    target = None
    if f["pc"]:
        target = sim._read(addr + 4 * len(regs), 4)
    sim._rset(13, addr + 4 * count)
    if target is not None:
        sim._branch(target & ~1)
        return True


def _h_ldm(sim, ins):
    f = ins.fields
    base = sim._rget(f["rn"])
    for i, r in enumerate(f["regs"]):
        sim._rset(r, sim._read(base + 4 * i, 4))
    if f["wback"]:
        sim._rset(f["rn"], base + 4 * len(f["regs"]))


def _h_stm(sim, ins):
    f = ins.fields
    base = sim._rget(f["rn"])
    for i, r in enumerate(f["regs"]):
        sim._write(base + 4 * i, 4, sim._rget(r))
    sim._rset(f["rn"], base + 4 * len(f["regs"]))


# control flow

def _h_bcond(sim, ins):
    if _cond_passed(ins.fields["cond"], sim.state):
        sim._branch(ins.fields["target"])
        return True


def _h_b(sim, ins):
    sim._branch(ins.fields["target"])
    return True


def _h_bl(sim, ins):
    sim._rset(14, (ins.addr + 4) | 1)
    sim._branch(ins.fields["target"])
    return True


def _h_bx(sim, ins):
    sim._branch(sim._rget(ins.fields["rm"]) & ~1)
    return True


def _h_blx(sim, ins):
    target = sim._rget(ins.fields["rm"]) & ~1
    sim._rset(14, (ins.addr + 2) | 1)
    sim._branch(target)
    return True


HANDLERS = {
    "MOVS_IMM": _h_movs_imm, "MOVS_REG": _h_movs_reg, "MOV_HI": _h_mov_hi,
    "ADD_HI": _h_add_hi, "CMP_HI": _h_cmp_hi,
    "LSLS_IMM": _h_lsls_imm, "LSRS_IMM": _h_lsrs_imm, "ASRS_IMM": _h_asrs_imm,
    "LSLS_REG": _h_lsls_reg, "LSRS_REG": _h_lsrs_reg, "ASRS_REG": _h_asrs_reg,
    "RORS": _h_rors,
    "ADDS_REG": _h_adds_reg, "SUBS_REG": _h_subs_reg,
    "ADDS_IMM3": _h_adds_imm3, "SUBS_IMM3": _h_subs_imm3,
    "ADDS_IMM8": _h_adds_imm8, "SUBS_IMM8": _h_subs_imm8,
    "CMP_IMM": _h_cmp_imm, "CMP_REG": _h_cmp_reg, "CMN": _h_cmn,
    "ADCS": _h_adcs, "SBCS": _h_sbcs, "RSBS": _h_rsbs,
    "ANDS": _h_ands, "EORS": _h_eors, "ORRS": _h_orrs, "BICS": _h_bics,
    "MVNS": _h_mvns, "TST": _h_tst, "MULS": _h_muls,
    "ADR": _h_adr, "ADD_SP_IMM8": _h_add_sp_imm8,
    "ADD_SP_IMM7": _h_add_sp_imm7, "SUB_SP_IMM7": _h_sub_sp_imm7,
    "SXTH": _h_sxth, "SXTB": _h_sxtb, "UXTH": _h_uxth, "UXTB": _h_uxtb,
    "REV": _h_rev, "REV16": _h_rev16, "REVSH": _h_revsh,
    "HINT": _h_hint, "BKPT": _h_bkpt,
    "LDR_LIT": _h_ldr_lit,
    "LDR_IMM": _h_ldr_imm, "LDRB_IMM": _h_ldrb_imm, "LDRH_IMM": _h_ldrh_imm,
    "LDR_REG": _h_ldr_reg, "LDRB_REG": _h_ldrb_reg, "LDRH_REG": _h_ldrh_reg,
    "LDRSB_REG": _h_ldrsb_reg, "LDRSH_REG": _h_ldrsh_reg,
    "LDR_SP": _h_ldr_sp,
    "STR_IMM": _h_str_imm, "STRB_IMM": _h_strb_imm, "STRH_IMM": _h_strh_imm,
    "STR_REG": _h_str_reg, "STRB_REG": _h_strb_reg, "STRH_REG": _h_strh_reg,
    "STR_SP": _h_str_sp,
    "PUSH": _h_push, "POP": _h_pop, "LDM": _h_ldm, "STM": _h_stm,
    "BCOND": _h_bcond, "B": _h_b, "BL": _h_bl, "BX": _h_bx, "BLX": _h_blx,
}
