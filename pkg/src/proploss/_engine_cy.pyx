# cython: language_level=3, boundscheck=False, wraparound=False, cdivision=True
"""Compiled tape interpreter.

Semantics match the numpy engine instruction for instruction; reductions
accumulate sequentially in row-major pixel order, which is the reference
summation order. Hot loops are plain C over typed memoryviews.
"""

import numpy as np

from libc.math cimport exp as c_exp, log as c_log, pow as c_pow

from .program import (
    AXPY, CLAMP, CONST, EMAX, EMIN, EXP, LOAD, LOG, MEAN, MUL, NORM, ONEM,
    PROD, RMAX, RMIN, SUM,
)

NAME = "compiled"

cdef enum:
    OP_LOAD = 0
    OP_NORM = 1
    OP_CONST = 2
    OP_ONEM = 3
    OP_MUL = 4
    OP_EMIN = 5
    OP_EMAX = 6
    OP_CLAMP = 7
    OP_LOG = 8
    OP_EXP = 9
    OP_PROD = 10
    OP_SUM = 11
    OP_MEAN = 12
    OP_RMIN = 13
    OP_RMAX = 14
    OP_AXPY = 15

# The enum above must agree with program.py; checked at import.
assert (LOAD, NORM, CONST, ONEM, MUL, EMIN, EMAX, CLAMP, LOG, EXP,
        PROD, SUM, MEAN, RMIN, RMAX, AXPY) == tuple(range(16))


def forward(program, planes):
    """Execute the full tape over (K, N) planes; returns (n_regs, N) regs."""
    planes = np.ascontiguousarray(planes, dtype=np.float64)
    cdef const double[:, ::1] pl = planes
    cdef const long long[:, ::1] code = program.code
    cdef const double[:, ::1] faux = program.faux
    cdef const unsigned char[::1] riv = program.reg_is_vec
    cdef Py_ssize_t n = planes.shape[1]
    regs_arr = np.zeros((program.n_regs, n), dtype=np.float64)
    cdef double[:, ::1] regs = regs_arr
    cdef Py_ssize_t n_instr = code.shape[0]

    cdef Py_ssize_t i, j, dst, a, b
    cdef long long op
    cdef Py_ssize_t sa, sb
    cdef double f0, f1, va, vb, acc, mn, mx, r
    for i in range(n_instr):
        op = code[i, 0]
        dst = <Py_ssize_t> code[i, 1]
        a = <Py_ssize_t> code[i, 2]
        b = <Py_ssize_t> code[i, 3]
        f0 = faux[i, 0]
        f1 = faux[i, 1]
        if op == OP_LOAD:
            for j in range(n):
                regs[dst, j] = pl[<Py_ssize_t> code[i, 4], j]
        elif op == OP_NORM:
            mn = regs[a, 0]
            mx = regs[a, 0]
            for j in range(1, n):
                va = regs[a, j]
                if va < mn:
                    mn = va
                if va > mx:
                    mx = va
            r = mx - mn
            if r > 0.0:
                for j in range(n):
                    regs[dst, j] = (regs[a, j] - mn) / r
            else:
                for j in range(n):
                    regs[dst, j] = 0.0
        elif op == OP_CONST:
            regs[dst, 0] = f0
        elif op == OP_ONEM:
            if riv[dst]:
                sa = 1 if riv[a] else 0
                for j in range(n):
                    regs[dst, j] = 1.0 - regs[a, j * sa]
            else:
                regs[dst, 0] = 1.0 - regs[a, 0]
        elif op == OP_MUL:
            if riv[dst]:
                sa = 1 if riv[a] else 0
                sb = 1 if riv[b] else 0
                for j in range(n):
                    regs[dst, j] = regs[a, j * sa] * regs[b, j * sb]
            else:
                regs[dst, 0] = regs[a, 0] * regs[b, 0]
        elif op == OP_EMIN:
            if riv[dst]:
                sa = 1 if riv[a] else 0
                sb = 1 if riv[b] else 0
                for j in range(n):
                    va = regs[a, j * sa]
                    vb = regs[b, j * sb]
                    regs[dst, j] = va if va <= vb else vb
            else:
                va = regs[a, 0]
                vb = regs[b, 0]
                regs[dst, 0] = va if va <= vb else vb
        elif op == OP_EMAX:
            if riv[dst]:
                sa = 1 if riv[a] else 0
                sb = 1 if riv[b] else 0
                for j in range(n):
                    va = regs[a, j * sa]
                    vb = regs[b, j * sb]
                    regs[dst, j] = va if va >= vb else vb
            else:
                va = regs[a, 0]
                vb = regs[b, 0]
                regs[dst, 0] = va if va >= vb else vb
        elif op == OP_CLAMP:
            if riv[dst]:
                for j in range(n):
                    va = regs[a, j]
                    regs[dst, j] = f0 if va < f0 else (f1 if va > f1 else va)
            else:
                va = regs[a, 0]
                regs[dst, 0] = f0 if va < f0 else (f1 if va > f1 else va)
        elif op == OP_LOG:
            if riv[dst]:
                for j in range(n):
                    regs[dst, j] = c_log(regs[a, j])
            else:
                regs[dst, 0] = c_log(regs[a, 0])
        elif op == OP_EXP:
            if riv[dst]:
                for j in range(n):
                    regs[dst, j] = c_exp(regs[a, j])
            else:
                regs[dst, 0] = c_exp(regs[a, 0])
        elif op == OP_PROD:
            if riv[a]:
                acc = 1.0
                for j in range(n):
                    acc *= regs[a, j]
                regs[dst, 0] = acc
            else:
                regs[dst, 0] = c_pow(regs[a, 0], <double> n)
        elif op == OP_SUM:
            if riv[a]:
                acc = 0.0
                for j in range(n):
                    acc += regs[a, j]
                regs[dst, 0] = acc
            else:
                regs[dst, 0] = n * regs[a, 0]
        elif op == OP_MEAN:
            if riv[a]:
                acc = 0.0
                for j in range(n):
                    acc += regs[a, j]
                regs[dst, 0] = acc / n
            else:
                regs[dst, 0] = regs[a, 0]
        elif op == OP_RMIN:
            if riv[a]:
                mn = regs[a, 0]
                for j in range(1, n):
                    if regs[a, j] < mn:
                        mn = regs[a, j]
                regs[dst, 0] = mn
            else:
                regs[dst, 0] = regs[a, 0]
        elif op == OP_RMAX:
            if riv[a]:
                mx = regs[a, 0]
                for j in range(1, n):
                    if regs[a, j] > mx:
                        mx = regs[a, j]
                regs[dst, 0] = mx
            else:
                regs[dst, 0] = regs[a, 0]
        elif op == OP_AXPY:
            regs[dst, 0] = regs[dst, 0] + f0 * regs[a, 0]
        else:
            raise ValueError(f"bad opcode {op}")
    return regs_arr


def backward(program, regs, planes):
    """Adjoints of the loss register w.r.t. the planes, shape (K, N)."""
    regs = np.ascontiguousarray(regs, dtype=np.float64)
    planes = np.ascontiguousarray(planes, dtype=np.float64)
    cdef const double[:, ::1] rg = regs
    cdef const long long[:, ::1] code = program.code
    cdef const double[:, ::1] faux = program.faux
    cdef const unsigned char[::1] riv = program.reg_is_vec
    cdef Py_ssize_t n = planes.shape[1]
    grad_arr = np.zeros((program.n_regs, n), dtype=np.float64)
    gp_arr = np.zeros((program.n_channels, n), dtype=np.float64)
    scratch_pre = np.empty(n, dtype=np.float64)
    scratch_suf = np.empty(n, dtype=np.float64)
    cdef double[:, ::1] grad = grad_arr
    cdef double[:, ::1] gp = gp_arr
    cdef double[::1] pre = scratch_pre
    cdef double[::1] suf = scratch_suf

    grad[<Py_ssize_t> program.loss_reg, 0] = 1.0
    cdef Py_ssize_t i, j, dst, a, b, mn_i, mx_i
    cdef long long op
    cdef Py_ssize_t sa, sb, sd
    cdef double f0, f1, va, vb, gd, acc, s_g, s_go, r
    for i in range(<Py_ssize_t> program.n_loss_instr - 1, -1, -1):
        op = code[i, 0]
        dst = <Py_ssize_t> code[i, 1]
        a = <Py_ssize_t> code[i, 2]
        b = <Py_ssize_t> code[i, 3]
        f0 = faux[i, 0]
        f1 = faux[i, 1]
        if op == OP_LOAD:
            for j in range(n):
                gp[<Py_ssize_t> code[i, 4], j] += grad[dst, j]
        elif op == OP_NORM:
            mn_i = 0
            mx_i = 0
            for j in range(1, n):
                if rg[a, j] < rg[a, mn_i]:
                    mn_i = j
                if rg[a, j] > rg[a, mx_i]:
                    mx_i = j
            r = rg[a, mx_i] - rg[a, mn_i]
            if r > 0.0:
                s_g = 0.0
                s_go = 0.0
                for j in range(n):
                    s_g += grad[dst, j]
                    s_go += grad[dst, j] * rg[dst, j]
                for j in range(n):
                    grad[a, j] += grad[dst, j] / r
                grad[a, mn_i] += (s_go - s_g) / r
                grad[a, mx_i] -= s_go / r
        elif op == OP_CONST:
            pass
        elif op == OP_ONEM:
            if riv[dst]:
                if riv[a]:
                    for j in range(n):
                        grad[a, j] -= grad[dst, j]
                else:
                    acc = 0.0
                    for j in range(n):
                        acc += grad[dst, j]
                    grad[a, 0] -= acc
            else:
                grad[a, 0] -= grad[dst, 0]
        elif op == OP_MUL:
            if riv[dst]:
                sa = 1 if riv[a] else 0
                sb = 1 if riv[b] else 0
                if riv[a]:
                    for j in range(n):
                        grad[a, j] += grad[dst, j] * rg[b, j * sb]
                else:
                    acc = 0.0
                    for j in range(n):
                        acc += grad[dst, j] * rg[b, j * sb]
                    grad[a, 0] += acc
                if riv[b]:
                    for j in range(n):
                        grad[b, j] += grad[dst, j] * rg[a, j * sa]
                else:
                    acc = 0.0
                    for j in range(n):
                        acc += grad[dst, j] * rg[a, j * sa]
                    grad[b, 0] += acc
            else:
                grad[a, 0] += grad[dst, 0] * rg[b, 0]
                grad[b, 0] += grad[dst, 0] * rg[a, 0]
        elif op == OP_EMIN or op == OP_EMAX:
            # Ties route the full adjoint to the first operand.
            if riv[dst]:
                sa = 1 if riv[a] else 0
                sb = 1 if riv[b] else 0
                for j in range(n):
                    va = rg[a, j * sa]
                    vb = rg[b, j * sb]
                    gd = grad[dst, j]
                    if (va <= vb) if op == OP_EMIN else (va >= vb):
                        grad[a, j * sa] += gd
                    else:
                        grad[b, j * sb] += gd
            else:
                va = rg[a, 0]
                vb = rg[b, 0]
                if (va <= vb) if op == OP_EMIN else (va >= vb):
                    grad[a, 0] += grad[dst, 0]
                else:
                    grad[b, 0] += grad[dst, 0]
        elif op == OP_CLAMP:
            if riv[dst]:
                if riv[a]:
                    for j in range(n):
                        va = rg[a, j]
                        if f0 <= va <= f1:
                            grad[a, j] += grad[dst, j]
                else:
                    va = rg[a, 0]
                    if f0 <= va <= f1:
                        acc = 0.0
                        for j in range(n):
                            acc += grad[dst, j]
                        grad[a, 0] += acc
            else:
                va = rg[a, 0]
                if f0 <= va <= f1:
                    grad[a, 0] += grad[dst, 0]
        elif op == OP_LOG:
            if riv[dst]:
                for j in range(n):
                    grad[a, j] += grad[dst, j] / rg[a, j]
            else:
                grad[a, 0] += grad[dst, 0] / rg[a, 0]
        elif op == OP_EXP:
            if riv[dst]:
                for j in range(n):
                    grad[a, j] += grad[dst, j] * rg[dst, j]
            else:
                grad[a, 0] += grad[dst, 0] * rg[dst, 0]
        elif op == OP_PROD:
            gd = grad[dst, 0]
            if riv[a]:
                pre[0] = 1.0
                for j in range(1, n):
                    pre[j] = pre[j - 1] * rg[a, j - 1]
                suf[n - 1] = 1.0
                for j in range(n - 2, -1, -1):
                    suf[j] = suf[j + 1] * rg[a, j + 1]
                for j in range(n):
                    grad[a, j] += gd * pre[j] * suf[j]
            else:
                grad[a, 0] += gd * n * c_pow(rg[a, 0], <double> (n - 1))
        elif op == OP_SUM:
            if riv[a]:
                for j in range(n):
                    grad[a, j] += grad[dst, 0]
            else:
                grad[a, 0] += n * grad[dst, 0]
        elif op == OP_MEAN:
            if riv[a]:
                gd = grad[dst, 0] / n
                for j in range(n):
                    grad[a, j] += gd
            else:
                grad[a, 0] += grad[dst, 0]
        elif op == OP_RMIN:
            if riv[a]:
                mn_i = 0
                for j in range(1, n):
                    if rg[a, j] < rg[a, mn_i]:
                        mn_i = j
                grad[a, mn_i] += grad[dst, 0]
            else:
                grad[a, 0] += grad[dst, 0]
        elif op == OP_RMAX:
            if riv[a]:
                mx_i = 0
                for j in range(1, n):
                    if rg[a, j] > rg[a, mx_i]:
                        mx_i = j
                grad[a, mx_i] += grad[dst, 0]
            else:
                grad[a, 0] += grad[dst, 0]
        elif op == OP_AXPY:
            grad[a, 0] += f0 * grad[dst, 0]
    return gp_arr
