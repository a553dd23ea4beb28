"""Straight-line tape programs over pixel-vector and scalar registers.

A compiled loss is a flat instruction list interpreted by one of the
execution engines. Registers are either full pixel vectors of length N or
scalars (stored in slot 0 of their row). The first n_loss_instr instructions
compute the differentiable loss; the remainder compute the satisfaction
degree and are never differentiated.

Instruction encoding: code row [op, dst, a, b, iaux] (int64) plus faux row
[f0, f1] (float64). Unused fields are -1 / 0.0.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

# Opcodes. Vector ops act elementwise; reductions write a scalar register.
LOAD = 0    # dst <- stack channel iaux (pixel vector)
NORM = 1    # dst <- min-max normalize a (flat map if degenerate)
CONST = 2   # dst <- f0 (scalar)
ONEM = 3    # dst <- 1 - a
MUL = 4     # dst <- a * b
EMIN = 5    # dst <- min(a, b) elementwise, ties take a
EMAX = 6    # dst <- max(a, b) elementwise, ties take a
CLAMP = 7   # dst <- clip(a, f0, f1)
LOG = 8     # dst <- log(a)
EXP = 9     # dst <- exp(a)
PROD = 10   # dst <- prod over a (scalar; s^N when a is scalar)
SUM = 11    # dst <- sum over a (scalar; N*s when a is scalar)
MEAN = 12   # dst <- mean over a (scalar; s when a is scalar)
RMIN = 13   # dst <- min over a, ties take lowest pixel index
RMAX = 14   # dst <- max over a, ties take lowest pixel index
AXPY = 15   # dst <- dst + f0 * a (scalar accumulate)

OP_NAMES = {
    LOAD: "load", NORM: "norm", CONST: "const", ONEM: "onem", MUL: "mul",
    EMIN: "emin", EMAX: "emax", CLAMP: "clamp", LOG: "log", EXP: "exp",
    PROD: "prod", SUM: "sum", MEAN: "mean", RMIN: "rmin", RMAX: "rmax",
    AXPY: "axpy",
}

_REDUCTIONS = frozenset({PROD, SUM, MEAN, RMIN, RMAX})


@dataclass(frozen=True)
class Program:
    """A compiled tape plus its register layout and output registers."""

    n_regs: int
    reg_is_vec: np.ndarray = field(repr=False)   # (n_regs,) uint8
    code: np.ndarray = field(repr=False)         # (n_instr, 5) int64
    faux: np.ndarray = field(repr=False)         # (n_instr, 2) float64
    n_loss_instr: int
    loss_reg: int
    degree_reg: int
    conjunct_loss_regs: tuple[int, ...]
    conjunct_degree_regs: tuple[int, ...]
    conjunct_weights: tuple[float, ...]
    n_channels: int

    def __post_init__(self) -> None:
        code = np.ascontiguousarray(self.code, dtype=np.int64)
        faux = np.ascontiguousarray(self.faux, dtype=np.float64)
        riv = np.ascontiguousarray(self.reg_is_vec, dtype=np.uint8)
        if code.shape != (len(faux), 5) or faux.shape[1] != 2:
            raise ValueError("malformed tape arrays")
        if riv.shape != (self.n_regs,):
            raise ValueError("register table size mismatch")
        if not 0 <= self.n_loss_instr <= len(code):
            raise ValueError("loss section out of range")
        code.setflags(write=False)
        faux.setflags(write=False)
        riv.setflags(write=False)
        object.__setattr__(self, "code", code)
        object.__setattr__(self, "faux", faux)
        object.__setattr__(self, "reg_is_vec", riv)

    @property
    def n_instr(self) -> int:
        return len(self.code)

    def disassemble(self) -> str:
        """Human-readable tape listing, one instruction per line."""
        lines = []
        for i in range(self.n_instr):
            op, dst, a, b, iaux = self.code[i]
            f0, f1 = self.faux[i]
            head = "L" if i < self.n_loss_instr else "D"
            parts = [f"{head}{i:04d}", f"r{dst} <- {OP_NAMES[int(op)]}"]
            if a >= 0:
                parts.append(f"r{a}")
            if b >= 0:
                parts.append(f"r{b}")
            if op == LOAD:
                parts.append(f"ch{iaux}")
            if op in (CONST, CLAMP, AXPY):
                parts.append(f"[{f0:g}, {f1:g}]" if op == CLAMP else f"{f0:g}")
            lines.append(" ".join(parts))
        return "\n".join(lines)


class TapeBuilder:
    """Accumulates instructions and register metadata during compilation."""

    def __init__(self, n_channels: int) -> None:
        self.n_channels = n_channels
        self._reg_is_vec: list[bool] = []
        self._code: list[tuple[int, int, int, int, int]] = []
        self._faux: list[tuple[float, float]] = []
        self.n_loss_instr = -1

    def new_reg(self, is_vec: bool) -> int:
        self._reg_is_vec.append(is_vec)
        return len(self._reg_is_vec) - 1

    def emit(
        self,
        op: int,
        dst: int,
        a: int = -1,
        b: int = -1,
        iaux: int = -1,
        f0: float = 0.0,
        f1: float = 0.0,
    ) -> int:
        self._code.append((op, dst, a, b, iaux))
        self._faux.append((f0, f1))
        return dst

    # Convenience emitters returning a fresh destination register.

    def load(self, channel: int) -> int:
        r = self.new_reg(True)
        return self.emit(LOAD, r, iaux=channel)

    def unary(self, op: int, a: int, f0: float = 0.0, f1: float = 0.0) -> int:
        r = self.new_reg(self._reg_is_vec[a])
        return self.emit(op, r, a=a, f0=f0, f1=f1)

    def binary(self, op: int, a: int, b: int) -> int:
        r = self.new_reg(self._reg_is_vec[a] or self._reg_is_vec[b])
        return self.emit(op, r, a=a, b=b)

    def const(self, value: float) -> int:
        r = self.new_reg(False)
        return self.emit(CONST, r, f0=value)

    def reduce(self, op: int, a: int) -> int:
        r = self.new_reg(False)
        return self.emit(op, r, a=a)

    def axpy(self, dst: int, a: int, weight: float) -> None:
        self.emit(AXPY, dst, a=a, f0=weight)

    def mark_loss_end(self) -> None:
        self.n_loss_instr = len(self._code)

    def is_vec(self, reg: int) -> bool:
        return self._reg_is_vec[reg]

    def finish(
        self,
        loss_reg: int,
        degree_reg: int,
        conjunct_loss_regs: tuple[int, ...],
        conjunct_degree_regs: tuple[int, ...],
        conjunct_weights: tuple[float, ...],
    ) -> Program:
        if self.n_loss_instr < 0:
            self.n_loss_instr = len(self._code)
        code = np.array(self._code, dtype=np.int64).reshape(-1, 5)
        faux = np.array(self._faux, dtype=np.float64).reshape(-1, 2)
        return Program(
            n_regs=len(self._reg_is_vec),
            reg_is_vec=np.array(self._reg_is_vec, dtype=np.uint8),
            code=code,
            faux=faux,
            n_loss_instr=self.n_loss_instr,
            loss_reg=loss_reg,
            degree_reg=degree_reg,
            conjunct_loss_regs=conjunct_loss_regs,
            conjunct_degree_regs=conjunct_degree_regs,
            conjunct_weights=conjunct_weights,
            n_channels=self.n_channels,
        )
