"""Hot numerical kernels: potential jets, hierarchy right-hand sides, adaptive stepper.

Everything in this module is written in a nopython-compatible subset of
Python (scalars, cmath, preallocated numpy arrays) so that the loader in
``bomca.kernels`` can either compile each function with ``numba.njit`` or
leave it as interpreted Python. Keep it free of classes, closures and
first-class function passing; dispatch happens through small integer flags.

State vector layout used throughout, for truncation order N:

    y = [x, v0, v1, ..., vN, S]        (complex128, length N + 3)

where ``v_n`` is the n-th spatial derivative of the complex velocity field
evaluated along the trajectory and ``S`` is the complex action.
"""
import cmath
import math

import numpy as np

# integer status codes returned by every kernel
OK = 0
STEP_LIMIT = 1
BLOWUP = 2
POLE = 3
STEP_UNDERFLOW = 4

# potential variants (parameter slots a, b per variant)
POT_FREE = 0        # V = 0
POT_HARMONIC = 1    # V = a x^2 / 2
POT_ECKART = 2      # V = a / cosh^2(b x)

# right-hand-side variants
RHS_HIERARCHY = 0
RHS_CLASSICAL_N1 = 1

# |cosh(b x)| below this counts as sitting on a pole of the continued Eckart barrier
POLE_EPS = 1e-8

MAX_ORDER = 8


def _binomial_table(n_max):
    t = np.zeros((n_max + 1, n_max + 1))
    for n in range(n_max + 1):
        t[n, 0] = 1.0
        for k in range(1, n + 1):
            t[n, k] = t[n - 1, k - 1] + t[n - 1, k]
    return t


# covers every C(n, j) needed up to jet order MAX_ORDER + 1
BINOMIAL = _binomial_table(MAX_ORDER + 2)

# Dormand-Prince 5(4) tableau. The system is autonomous so stage times are unused.
_A21 = 1.0 / 5.0
_A31 = 3.0 / 40.0
_A32 = 9.0 / 40.0
_A41 = 44.0 / 45.0
_A42 = -56.0 / 15.0
_A43 = 32.0 / 9.0
_A51 = 19372.0 / 6561.0
_A52 = -25360.0 / 2187.0
_A53 = 64448.0 / 6561.0
_A54 = -212.0 / 729.0
_A61 = 9017.0 / 3168.0
_A62 = -355.0 / 33.0
_A63 = 46732.0 / 5247.0
_A64 = 49.0 / 176.0
_A65 = -5103.0 / 18656.0
_B1 = 35.0 / 384.0
_B3 = 500.0 / 1113.0
_B4 = 125.0 / 192.0
_B5 = -2187.0 / 6784.0
_B6 = 11.0 / 84.0
_E1 = 71.0 / 57600.0
_E3 = -71.0 / 16695.0
_E4 = 71.0 / 1920.0
_E5 = -17253.0 / 339200.0
_E6 = 22.0 / 525.0
_E7 = -1.0 / 40.0


def potential_jet(kind, a, b, x, order):
    """Derivatives V(x), V'(x), ..., V^(order)(x) at complex x.

    Returns (status, values). The Eckart variant runs Taylor-series
    arithmetic: series of cosh(b(x+h)) in h, Cauchy square, series
    reciprocal, then k! to convert coefficients back to derivatives.
    """
    out = np.zeros(order + 1, np.complex128)
    if kind == POT_HARMONIC:
        out[0] = 0.5 * a * x * x
        if order >= 1:
            out[1] = a * x
        if order >= 2:
            out[2] = a + 0j
        return OK, out
    if kind == POT_ECKART:
        u = b * x
        ch = cmath.cosh(u)
        if abs(ch) < POLE_EPS:
            return POLE, out
        sh = cmath.sinh(u)
        m = order
        c = np.zeros(m + 1, np.complex128)
        c[0] = ch
        bk = 1.0
        for k in range(1, m + 1):
            bk *= b / k
            if k % 2 == 0:
                c[k] = bk * ch
            else:
                c[k] = bk * sh
        # s = c * c, the series of cosh^2
        s = np.zeros(m + 1, np.complex128)
        for k in range(m + 1):
            acc = 0j
            for j in range(k + 1):
                acc += c[j] * c[k - j]
            s[k] = acc
        # r = 1 / s by the reciprocal recurrence
        r = np.zeros(m + 1, np.complex128)
        r[0] = 1.0 / s[0]
        for k in range(1, m + 1):
            acc = 0j
            for j in range(1, k + 1):
                acc += s[j] * r[k - j]
            r[k] = -acc * r[0]
        out[0] = a * r[0]
        fact = 1.0
        for k in range(1, m + 1):
            fact *= k
            out[k] = a * r[k] * fact
        return OK, out
    return OK, out  # free particle


def hierarchy_rhs(y, dy, nv, kind, a, b, mass, hbar):
    """Truncated derivative hierarchy, writes into dy, returns a status code.

    dx/dt   = v0
    dv_n/dt = -V^(n+1)/m + (i hbar / 2m) v_{n+2} - sum_{j=1..n} C(n,j) v_j v_{n-j+1}
    dS/dt   = m v0^2 / 2 - V + (i hbar / 2) v1

    with the closure v_{N+1} = v_{N+2} = 0 above the truncation order nv.
    """
    x = y[0]
    status, vj = potential_jet(kind, a, b, x, nv + 1)
    if status != OK:
        return status
    qc = 0.5j * hbar / mass
    dy[0] = y[1]
    for n in range(nv + 1):
        if n + 2 <= nv:
            tail = qc * y[1 + n + 2]
        else:
            tail = 0j
        g = 0j
        for j in range(1, n + 1):
            g += BINOMIAL[n, j] * y[1 + j] * y[1 + n - j + 1]
        dy[1 + n] = -vj[n + 1] / mass + tail - g
    v0 = y[1]
    dy[nv + 2] = 0.5 * mass * v0 * v0 - vj[0] + 0.5j * hbar * y[2]
    return OK


def classical_rhs(y, dy, kind, a, b, mass, hbar):
    """Hand-specialized N = 1 system with closed-form potential derivatives.

    Same state layout as the generic hierarchy at nv = 1: y = [x, v0, v1, S].
    At N = 1 the quantum coupling terms vanish and the equations reduce to
    classical complex trajectories carrying a log-derivative v1 and an action
    with the (i hbar / 2) v1 quantum correction.
    """
    x = y[0]
    if kind == POT_HARMONIC:
        v = 0.5 * a * x * x
        v1 = a * x
        v2 = a + 0j
    elif kind == POT_ECKART:
        u = b * x
        ch = cmath.cosh(u)
        if abs(ch) < POLE_EPS:
            return POLE
        sh = cmath.sinh(u)
        ich = 1.0 / ch
        ich2 = ich * ich
        v = a * ich2
        v1 = -2.0 * a * b * sh * ich2 * ich
        v2 = -2.0 * a * b * b * (ich2 - 3.0 * sh * sh * ich2 * ich2)
    else:
        v = 0j
        v1 = 0j
        v2 = 0j
    w0 = y[1]
    w1 = y[2]
    dy[0] = w0
    dy[1] = -v1 / mass
    dy[2] = -v2 / mass - w1 * w1
    dy[3] = 0.5 * mass * w0 * w0 - v + 0.5j * hbar * w1
    return OK


def rhs_eval(rhs_kind, y, dy, nv, kind, a, b, mass, hbar):
    if rhs_kind == RHS_CLASSICAL_N1:
        return classical_rhs(y, dy, kind, a, b, mass, hbar)
    return hierarchy_rhs(y, dy, nv, kind, a, b, mass, hbar)


def propagate(y0, t0, out_times, nv, kind, a, b, mass, hbar, rhs_kind,
              rel_tol, abs_tol, h_init, max_step, max_attempts,
              blowup_threshold, y_out):
    """Adaptive Dormand-Prince 5(4) propagation of one trajectory.

    Fills y_out[i] with the state at out_times[i] (strictly increasing,
    >= t0; exact hits, no interpolation). Returns
    (status, t_reached, accepted_steps, rows_filled).

    Any stage that lands within POLE_EPS of a potential pole triggers a step
    retry at h/4; only if the step collapses entirely does POLE propagate up.
    Blowup is checked on accepted states: |v_n| above blowup_threshold or
    non-finite aborts with the trajectory parked at the failure time.
    """
    n = y0.shape[0]
    n_out = out_times.shape[0]
    y = y0.copy()
    ynew = np.zeros(n, np.complex128)
    ytmp = np.zeros(n, np.complex128)
    k1 = np.zeros(n, np.complex128)
    k2 = np.zeros(n, np.complex128)
    k3 = np.zeros(n, np.complex128)
    k4 = np.zeros(n, np.complex128)
    k5 = np.zeros(n, np.complex128)
    k6 = np.zeros(n, np.complex128)
    k7 = np.zeros(n, np.complex128)
    t = t0
    accepted = 0
    attempts = 0
    filled = 0

    status = rhs_eval(rhs_kind, y, k1, nv, kind, a, b, mass, hbar)
    if status != OK:
        return status, t, accepted, filled

    span = out_times[n_out - 1] - t0
    h = h_init
    if h <= 0.0:
        h = span * 1e-3
    if h > max_step:
        h = max_step

    for iout in range(n_out):
        tt = out_times[iout]
        while t < tt - 1e-14 * max(1.0, abs(tt)):
            if attempts >= max_attempts:
                return STEP_LIMIT, t, accepted, filled
            attempts += 1
            hs = h
            if hs > tt - t:
                hs = tt - t
            if hs < 1e-15 * max(1.0, abs(t)):
                return STEP_UNDERFLOW, t, accepted, filled

            stage_ok = True
            for i in range(n):
                ytmp[i] = y[i] + hs * (_A21 * k1[i])
            if rhs_eval(rhs_kind, ytmp, k2, nv, kind, a, b, mass, hbar) != OK:
                stage_ok = False
            if stage_ok:
                for i in range(n):
                    ytmp[i] = y[i] + hs * (_A31 * k1[i] + _A32 * k2[i])
                if rhs_eval(rhs_kind, ytmp, k3, nv, kind, a, b, mass, hbar) != OK:
                    stage_ok = False
            if stage_ok:
                for i in range(n):
                    ytmp[i] = y[i] + hs * (_A41 * k1[i] + _A42 * k2[i] + _A43 * k3[i])
                if rhs_eval(rhs_kind, ytmp, k4, nv, kind, a, b, mass, hbar) != OK:
                    stage_ok = False
            if stage_ok:
                for i in range(n):
                    ytmp[i] = y[i] + hs * (_A51 * k1[i] + _A52 * k2[i]
                                           + _A53 * k3[i] + _A54 * k4[i])
                if rhs_eval(rhs_kind, ytmp, k5, nv, kind, a, b, mass, hbar) != OK:
                    stage_ok = False
            if stage_ok:
                for i in range(n):
                    ytmp[i] = y[i] + hs * (_A61 * k1[i] + _A62 * k2[i] + _A63 * k3[i]
                                           + _A64 * k4[i] + _A65 * k5[i])
                if rhs_eval(rhs_kind, ytmp, k6, nv, kind, a, b, mass, hbar) != OK:
                    stage_ok = False
            if stage_ok:
                for i in range(n):
                    ynew[i] = y[i] + hs * (_B1 * k1[i] + _B3 * k3[i] + _B4 * k4[i]
                                           + _B5 * k5[i] + _B6 * k6[i])
                # FSAL stage, reused as k1 of the next step on acceptance
                if rhs_eval(rhs_kind, ynew, k7, nv, kind, a, b, mass, hbar) != OK:
                    stage_ok = False
            if not stage_ok:
                h = hs * 0.25
                continue

            errsum = 0.0
            for i in range(n):
                e = hs * (_E1 * k1[i] + _E3 * k3[i] + _E4 * k4[i]
                          + _E5 * k5[i] + _E6 * k6[i] + _E7 * k7[i])
                ay = abs(y[i])
                an = abs(ynew[i])
                big = ay if ay > an else an
                sc = abs_tol + rel_tol * big
                q = abs(e) / sc
                errsum += q * q
            norm = math.sqrt(errsum / n)
            if norm != norm:  # NaN from an off-manifold stage point
                h = hs * 0.25
                continue

            if norm <= 1.0:
                t = t + hs
                for i in range(n):
                    y[i] = ynew[i]
                tmp = k1
                k1 = k7
                k7 = tmp
                accepted += 1
                for i in range(1, nv + 2):
                    av = abs(y[i])
                    if av > blowup_threshold or av != av:
                        return BLOWUP, t, accepted, filled
                if norm < 1e-300:
                    fac = 5.0
                else:
                    fac = 0.9 * norm ** -0.2
                    if fac > 5.0:
                        fac = 5.0
                h = hs * fac
                if h > max_step:
                    h = max_step
            else:
                fac = 0.9 * norm ** -0.2
                if fac < 0.2:
                    fac = 0.2
                h = hs * fac
        y_out[iout, :] = y
        filled += 1
    return OK, t, accepted, filled


# compiled in this order by the backend loader
KERNEL_NAMES = ("potential_jet", "hierarchy_rhs", "classical_rhs", "rhs_eval", "propagate")
