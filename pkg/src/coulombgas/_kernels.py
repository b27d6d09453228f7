"""Compiled inner loops for the Metropolis sampler.

Potentials are passed as the float64 code vector built in
:mod:`coulombgas.potential`: ``[kind, p0, p1, pert, a0, a1, a2, a3, inv_n]``.
"""
import math

import numpy as np
from numba import njit


@njit(cache=True, nogil=True)
def q_eval(code, x, y):
    kind = int(code[0])
    r2 = x * x + y * y
    if kind == 0:
        q = r2
    elif kind == 1:
        q = r2 ** code[1]
    else:
        tau = code[1]
        q = (r2 - tau * (x * x - y * y)) / (1.0 - tau * tau)
    pert = int(code[3])
    if pert == 0:
        return q
    if pert == 1:
        u = code[4]
    elif pert == 2:
        u = code[4] * math.sin(code[5] * x + code[6] * y)
    else:
        dx = x - code[5]
        dy = y - code[6]
        u = code[4] * math.exp(-(dx * dx + dy * dy) / (2.0 * code[7] * code[7]))
    return q + u * code[8]


@njit(cache=True, nogil=True)
def interaction_sums(xs, ys):
    n = xs.shape[0]
    s = np.zeros(n)
    for j in range(n):
        acc = 0.0
        for i in range(n):
            if i != j:
                dx = xs[j] - xs[i]
                dy = ys[j] - ys[i]
                acc += 0.5 * math.log(dx * dx + dy * dy)
        s[j] = acc
    return s


@njit(cache=True, nogil=True)
def move_delta_jit(xs, ys, sums, j, xn, yn, code, n_field, logs):
    """Energy change for moving particle j to (xn, yn); fills ``logs``."""
    n = xs.shape[0]
    acc = 0.0
    for i in range(n):
        if i == j:
            logs[i] = 0.0
            continue
        dx = xn - xs[i]
        dy = yn - ys[i]
        d2 = dx * dx + dy * dy
        if d2 == 0.0:
            return np.inf
        li = 0.5 * math.log(d2)
        logs[i] = li
        acc += li
    dq = q_eval(code, xn, yn) - q_eval(code, xs[j], ys[j])
    return -2.0 * (acc - sums[j]) + n_field * dq


@njit(cache=True, nogil=True)
def run_sweeps(xs, ys, sums, energy, code, n_field, beta, step, box,
               normals, uniforms, thin, out_x, out_y, out_e, out_acc,
               n_acc_total, n_prop_total):
    """Run ``normals.shape[0]`` sweeps of single-particle Gaussian moves.

    Every ``thin`` sweeps the configuration is written to the next row of
    the output arrays. Returns (energy, accepted, proposed, rows_written).
    """
    n = xs.shape[0]
    logs = np.empty(n)
    n_sweeps = normals.shape[0]
    accepted = 0
    proposed = 0
    row = 0
    for s in range(n_sweeps):
        for j in range(n):
            xn = xs[j] + step * normals[s, j, 0]
            yn = ys[j] + step * normals[s, j, 1]
            proposed += 1
            if xn < box[0] or xn > box[1] or yn < box[2] or yn > box[3]:
                continue
            dh = move_delta_jit(xs, ys, sums, j, xn, yn, code, n_field, logs)
            if not dh < np.inf:
                continue
            if dh > 0.0 and math.log(uniforms[s, j]) >= -beta * dh:
                continue
            total = 0.0
            for i in range(n):
                if i != j:
                    dx = xs[j] - xs[i]
                    dy = ys[j] - ys[i]
                    sums[i] += logs[i] - 0.5 * math.log(dx * dx + dy * dy)
                    total += logs[i]
            sums[j] = total
            xs[j] = xn
            ys[j] = yn
            energy += dh
            accepted += 1
        if thin > 0 and (s + 1) % thin == 0 and row < out_x.shape[0]:
            for i in range(n):
                out_x[row, i] = xs[i]
                out_y[row, i] = ys[i]
            out_e[row] = energy
            out_acc[row] = (n_acc_total + accepted) / max(n_prop_total + proposed, 1)
            row += 1
    return energy, accepted, proposed, row
