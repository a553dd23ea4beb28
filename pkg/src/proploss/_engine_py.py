"""Pure-Python (numpy) tape interpreter.

Reference implementation of the execution engine contract: forward evaluates
every instruction, backward walks the loss prefix in reverse and accumulates
exact adjoints. Reductions here use numpy's pairwise summation, which may
differ from strict sequential accumulation in the last couple of ulps.
"""

from __future__ import annotations

import numpy as np

from .program import (
    AXPY, CLAMP, CONST, EMAX, EMIN, EXP, LOAD, LOG, MEAN, MUL, NORM, ONEM,
    PROD, Program, RMAX, RMIN, SUM,
)

NAME = "python"


def forward(program: Program, planes: np.ndarray) -> np.ndarray:
    """Execute the full tape. Returns the (n_regs, N) register file.

    planes is the (K, N) stack; scalar registers live in column 0 of their
    row. log(0) on the degree section is intended (exp(-inf) collapses a
    geometric mean with a zero factor to exactly 0), so divide warnings are
    suppressed.
    """
    n = planes.shape[1]
    regs = np.zeros((program.n_regs, n), dtype=np.float64)
    code = program.code
    faux = program.faux
    with np.errstate(divide="ignore"):
        for i in range(program.n_instr):
            op, dst, a, b, _iaux = code[i]
            if op == LOAD:
                regs[dst] = planes[code[i, 4]]
            elif op == NORM:
                v = regs[a]
                mn = v.min()
                r = v.max() - mn
                if r > 0.0:
                    regs[dst] = (v - mn) / r
                else:
                    regs[dst] = 0.0
            elif op == CONST:
                regs[dst, 0] = faux[i, 0]
            elif op == ONEM:
                _store(regs, program, dst, a, 1.0 - _val(regs, program, a))
            elif op == MUL:
                va = _val(regs, program, a)
                vb = _val(regs, program, b)
                out = va * vb
                if program.reg_is_vec[dst]:
                    regs[dst] = out
                else:
                    regs[dst, 0] = out
            elif op == EMIN:
                _store_bin(regs, program, dst, np.minimum(
                    _val(regs, program, a), _val(regs, program, b)))
            elif op == EMAX:
                _store_bin(regs, program, dst, np.maximum(
                    _val(regs, program, a), _val(regs, program, b)))
            elif op == CLAMP:
                _store(regs, program, dst, a, np.clip(
                    _val(regs, program, a), faux[i, 0], faux[i, 1]))
            elif op == LOG:
                _store(regs, program, dst, a, np.log(_val(regs, program, a)))
            elif op == EXP:
                _store(regs, program, dst, a, np.exp(_val(regs, program, a)))
            elif op == PROD:
                if program.reg_is_vec[a]:
                    regs[dst, 0] = np.prod(regs[a])
                else:
                    regs[dst, 0] = regs[a, 0] ** n
            elif op == SUM:
                if program.reg_is_vec[a]:
                    regs[dst, 0] = np.sum(regs[a])
                else:
                    regs[dst, 0] = n * regs[a, 0]
            elif op == MEAN:
                if program.reg_is_vec[a]:
                    regs[dst, 0] = np.mean(regs[a])
                else:
                    regs[dst, 0] = regs[a, 0]
            elif op == RMIN:
                regs[dst, 0] = regs[a].min() if program.reg_is_vec[a] else regs[a, 0]
            elif op == RMAX:
                regs[dst, 0] = regs[a].max() if program.reg_is_vec[a] else regs[a, 0]
            elif op == AXPY:
                regs[dst, 0] += faux[i, 0] * regs[a, 0]
            else:
                raise ValueError(f"bad opcode {op}")
    return regs


def backward(program: Program, regs: np.ndarray, planes: np.ndarray) -> np.ndarray:
    """Adjoint of the loss w.r.t. the stack planes, shape (K, N).

    Seeds d(loss)/d(loss_reg) = 1 and walks only the loss section in
    reverse; the degree section never contributes. Tie rules: elementwise
    min/max route to the first operand, reduction min/max to the lowest
    pixel index, clamp passes gradient on the closed interval [lo, hi].
    """
    n = planes.shape[1]
    grad = np.zeros_like(regs)
    grad_planes = np.zeros((program.n_channels, n), dtype=np.float64)
    grad[program.loss_reg, 0] = 1.0
    code = program.code
    faux = program.faux
    for i in range(program.n_loss_instr - 1, -1, -1):
        op, dst, a, b, _iaux = code[i]
        if op == LOAD:
            grad_planes[code[i, 4]] += grad[dst]
        elif op == NORM:
            v = regs[a]
            mn_i = int(np.argmin(v))
            mx_i = int(np.argmax(v))
            r = v[mx_i] - v[mn_i]
            if r > 0.0:
                g = grad[dst]
                s_g = g.sum()
                s_go = float(np.dot(g, regs[dst]))
                grad[a] += g / r
                grad[a, mn_i] += (s_go - s_g) / r
                grad[a, mx_i] -= s_go / r
        elif op == CONST:
            pass
        elif op == ONEM:
            _acc(grad, program, a, -_adj(grad, program, dst))
        elif op == MUL:
            gd = _adj(grad, program, dst)
            _acc(grad, program, a, gd * _val(regs, program, b))
            _acc(grad, program, b, gd * _val(regs, program, a))
        elif op == EMIN:
            gd = _adj(grad, program, dst)
            mask = _val(regs, program, a) <= _val(regs, program, b)
            _acc(grad, program, a, gd * mask)
            _acc(grad, program, b, gd * ~mask)
        elif op == EMAX:
            gd = _adj(grad, program, dst)
            mask = _val(regs, program, a) >= _val(regs, program, b)
            _acc(grad, program, a, gd * mask)
            _acc(grad, program, b, gd * ~mask)
        elif op == CLAMP:
            gd = _adj(grad, program, dst)
            va = _val(regs, program, a)
            inside = (va >= faux[i, 0]) & (va <= faux[i, 1])
            _acc(grad, program, a, gd * inside)
        elif op == LOG:
            _acc(grad, program, a,
                 _adj(grad, program, dst) / _val(regs, program, a))
        elif op == EXP:
            _acc(grad, program, a,
                 _adj(grad, program, dst) * _val(regs, program, dst))
        elif op == PROD:
            gd = grad[dst, 0]
            if program.reg_is_vec[a]:
                v = regs[a]
                pre = np.ones(n)
                pre[1:] = np.cumprod(v[:-1])
                suf = np.ones(n)
                suf[:-1] = np.cumprod(v[:0:-1])[::-1]
                grad[a] += gd * pre * suf
            else:
                grad[a, 0] += gd * n * regs[a, 0] ** (n - 1)
        elif op == SUM:
            if program.reg_is_vec[a]:
                grad[a] += grad[dst, 0]
            else:
                grad[a, 0] += n * grad[dst, 0]
        elif op == MEAN:
            if program.reg_is_vec[a]:
                grad[a] += grad[dst, 0] / n
            else:
                grad[a, 0] += grad[dst, 0]
        elif op == RMIN:
            if program.reg_is_vec[a]:
                grad[a, int(np.argmin(regs[a]))] += grad[dst, 0]
            else:
                grad[a, 0] += grad[dst, 0]
        elif op == RMAX:
            if program.reg_is_vec[a]:
                grad[a, int(np.argmax(regs[a]))] += grad[dst, 0]
            else:
                grad[a, 0] += grad[dst, 0]
        elif op == AXPY:
            grad[a, 0] += faux[i, 0] * grad[dst, 0]
    return grad_planes


def _val(regs: np.ndarray, program: Program, r: int):
    return regs[r] if program.reg_is_vec[r] else regs[r, 0]


def _adj(grad: np.ndarray, program: Program, r: int):
    return grad[r] if program.reg_is_vec[r] else grad[r, 0]


def _store(regs: np.ndarray, program: Program, dst: int, a: int, out) -> None:
    if program.reg_is_vec[dst]:
        regs[dst] = out
    else:
        regs[dst, 0] = out


def _store_bin(regs: np.ndarray, program: Program, dst: int, out) -> None:
    if program.reg_is_vec[dst]:
        regs[dst] = out
    else:
        regs[dst, 0] = out


def _acc(grad: np.ndarray, program: Program, r: int, contrib) -> None:
    """Accumulate a contribution into a register's adjoint.

    A scalar register feeding a vector-shaped consumer collects the sum of
    the broadcast contributions.
    """
    if program.reg_is_vec[r]:
        grad[r] += contrib
    else:
        grad[r, 0] += np.sum(contrib)
