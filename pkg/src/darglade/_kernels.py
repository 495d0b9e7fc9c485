"""Compiled objective and Nelder-Mead kernels.

Everything here works on the scaled lag design ``(a, b, u, m2)`` produced by
``SignedLogSeries.lagged_design``. ``kind`` selects the criterion:
0 for the least-absolute-deviation (Laplace quasi-likelihood) objective,
1 for the Gaussian quasi-likelihood.
"""

import numba
import numpy as np

LAD = 0
GAUSS = 1

# penalty slope for a phi coordinate outside its box
_PHI_PENALTY = 1e3


@numba.njit(cache=True, nogil=True)
def criterion(phi, alpha, omega, a, b, u, m2, w, kind):
    n = a.shape[0]
    total = 0.0
    for t in range(n):
        v = omega * u[t] + alpha * a[t] * a[t]
        r = b[t] - phi * a[t]
        if kind == LAD:
            term = 0.5 * (m2[t] + np.log(v)) + abs(r) / np.sqrt(v)
        else:
            term = 0.5 * (m2[t] + np.log(v)) + r * r / (2.0 * v)
        total += w[t] * term
    return total / n


@numba.njit(cache=True, nogil=True)
def _sigmoid(x):
    if x >= 0.0:
        return 1.0 / (1.0 + np.exp(-x))
    e = np.exp(x)
    return e / (1.0 + e)


@numba.njit(cache=True, nogil=True)
def to_params(x, box):
    """Map transformed coordinates to ``(phi, alpha, omega, excess)``.

    ``box`` is ``[phi_lo, phi_hi, alpha_lo, alpha_hi, omega_lo, omega_hi]``;
    ``excess`` is how far ``x[0]`` sits outside the phi interval.
    """
    phi = min(max(x[0], box[0]), box[1])
    excess = abs(x[0] - phi)
    alpha = box[2] + (box[3] - box[2]) * _sigmoid(x[1])
    omega = box[4] + (box[5] - box[4]) * _sigmoid(x[2])
    return phi, alpha, omega, excess


@numba.njit(cache=True, nogil=True)
def _eval(x, box, a, b, u, m2, w, kind):
    phi, alpha, omega, excess = to_params(x, box)
    return criterion(phi, alpha, omega, a, b, u, m2, w, kind) + _PHI_PENALTY * excess


@numba.njit(cache=True, nogil=True)
def nelder_mead(x0, step, box, a, b, u, m2, w, kind, xtol, ftol, max_evals):
    """Standard Nelder-Mead (reflection 1, expansion 2, contraction and shrink 1/2).

    Stops when every vertex lies within ``xtol`` of the best one (max norm)
    and the objective spread is below ``ftol``. Returns
    ``(x_best, f_best, n_evals, converged)``.
    """
    dim = x0.shape[0]
    sim = np.empty((dim + 1, dim))
    fs = np.empty(dim + 1)
    sim[0] = x0
    for i in range(dim):
        sim[i + 1] = x0
        sim[i + 1, i] = x0[i] + step[i]
    for i in range(dim + 1):
        fs[i] = _eval(sim[i], box, a, b, u, m2, w, kind)
    n_evals = dim + 1
    converged = False
    xr = np.empty(dim)
    xe = np.empty(dim)
    xc = np.empty(dim)
    centroid = np.empty(dim)

    while True:
        order = np.argsort(fs, kind="mergesort")
        sim = sim[order]
        fs = fs[order]

        spread_x = 0.0
        for i in range(1, dim + 1):
            for j in range(dim):
                d = abs(sim[i, j] - sim[0, j])
                if d > spread_x:
                    spread_x = d
        spread_f = fs[dim] - fs[0]
        if spread_x <= xtol and spread_f <= ftol:
            converged = True
            break
        if n_evals >= max_evals:
            break

        for j in range(dim):
            s = 0.0
            for i in range(dim):
                s += sim[i, j]
            centroid[j] = s / dim

        for j in range(dim):
            xr[j] = 2.0 * centroid[j] - sim[dim, j]
        fr = _eval(xr, box, a, b, u, m2, w, kind)
        n_evals += 1

        if fr < fs[0]:
            for j in range(dim):
                xe[j] = 3.0 * centroid[j] - 2.0 * sim[dim, j]
            fe = _eval(xe, box, a, b, u, m2, w, kind)
            n_evals += 1
            if fe < fr:
                sim[dim] = xe
                fs[dim] = fe
            else:
                sim[dim] = xr
                fs[dim] = fr
            continue
        if fr < fs[dim - 1]:
            sim[dim] = xr
            fs[dim] = fr
            continue

        shrink = False
        if fr < fs[dim]:
            # outside contraction
            for j in range(dim):
                xc[j] = 1.5 * centroid[j] - 0.5 * sim[dim, j]
            fc = _eval(xc, box, a, b, u, m2, w, kind)
            n_evals += 1
            if fc <= fr:
                sim[dim] = xc
                fs[dim] = fc
            else:
                shrink = True
        else:
            # inside contraction
            for j in range(dim):
                xc[j] = 0.5 * centroid[j] + 0.5 * sim[dim, j]
            fc = _eval(xc, box, a, b, u, m2, w, kind)
            n_evals += 1
            if fc < fs[dim]:
                sim[dim] = xc
                fs[dim] = fc
            else:
                shrink = True
        if shrink:
            for i in range(1, dim + 1):
                for j in range(dim):
                    sim[i, j] = sim[0, j] + 0.5 * (sim[i, j] - sim[0, j])
                fs[i] = _eval(sim[i], box, a, b, u, m2, w, kind)
            n_evals += dim

    return sim[0].copy(), fs[0], n_evals, converged


# ---------------------------------------------------------------------------
# exact block polish for the LAD criterion
# ---------------------------------------------------------------------------

_EPS = 2.220446049250313e-16


@numba.njit(cache=True, nogil=True)
def _weighted_median_phi(alpha, omega, a, b, u, w, phi_lo, phi_hi, phi_now):
    """Minimiser over phi of the LAD criterion with ``(alpha, omega)`` held fixed.

    The phi-dependent part is ``sum c_t |b_t/a_t - phi|`` with
    ``c_t = w_t |a_t| / sqrt(v_t)``, minimised by a weighted median.
    """
    n = a.shape[0]
    z = np.empty(n)
    c = np.empty(n)
    k = 0
    total = 0.0
    for t in range(n):
        if a[t] != 0.0 and w[t] > 0.0:
            v = omega * u[t] + alpha * a[t] * a[t]
            z[k] = b[t] / a[t]
            c[k] = w[t] * abs(a[t]) / np.sqrt(v)
            total += c[k]
            k += 1
    if k == 0:
        return phi_now
    order = np.argsort(z[:k], kind="mergesort")
    half = 0.5 * total
    cum = 0.0
    med = z[order[k - 1]]
    for i in range(k):
        cum += c[order[i]]
        if cum >= half:
            med = z[order[i]]
            break
    return min(max(med, phi_lo), phi_hi)


@numba.njit(cache=True, nogil=True)
def _newton_scale(phi, alpha, omega, a, b, u, m2, w, box, f0):
    """Damped Newton steps on ``(alpha, omega)`` with phi fixed, kept inside the box."""
    n = a.shape[0]
    for _ in range(60):
        g0 = 0.0
        g1 = 0.0
        h00 = 0.0
        h01 = 0.0
        h11 = 0.0
        for t in range(n):
            if w[t] == 0.0:
                continue
            v = omega * u[t] + alpha * a[t] * a[t]
            e = abs(b[t] - phi * a[t]) / np.sqrt(v)
            da = a[t] * a[t] / v
            do = u[t] / v
            g = 0.5 * (1.0 - e)
            h = 0.75 * e - 0.5
            g0 += w[t] * g * da
            g1 += w[t] * g * do
            h00 += w[t] * h * da * da
            h01 += w[t] * h * da * do
            h11 += w[t] * h * do * do
        g0 /= n
        g1 /= n
        h00 /= n
        h01 /= n
        h11 /= n
        det = h00 * h11 - h01 * h01
        if h00 > 0.0 and det > 0.0:
            s0 = -(h11 * g0 - h01 * g1) / det
            s1 = -(h00 * g1 - h01 * g0) / det
        else:
            return alpha, omega, f0
        # active set: a coordinate on a bound that the step pushes outward is held fixed
        hold_a = (alpha <= box[2] and s0 < 0.0) or (alpha >= box[3] and s0 > 0.0)
        hold_o = (omega <= box[4] and s1 < 0.0) or (omega >= box[5] and s1 > 0.0)
        if hold_a and hold_o:
            return alpha, omega, f0
        if hold_o:
            s0, s1 = -g0 / h00, 0.0
            if (alpha <= box[2] and s0 < 0.0) or (alpha >= box[3] and s0 > 0.0):
                return alpha, omega, f0
        elif hold_a:
            if not h11 > 0.0:
                return alpha, omega, f0
            s0, s1 = 0.0, -g1 / h11
            if (omega <= box[4] and s1 < 0.0) or (omega >= box[5] and s1 > 0.0):
                return alpha, omega, f0
        lam = 1.0
        accepted = False
        for _ in range(40):
            na = min(max(alpha + lam * s0, box[2]), box[3])
            no = min(max(omega + lam * s1, box[4]), box[5])
            f1 = criterion(phi, na, no, a, b, u, m2, w, LAD)
            if f1 <= f0 + 8.0 * _EPS * (abs(f0) + 1.0):
                accepted = True
                break
            lam *= 0.5
        if not accepted:
            return alpha, omega, f0
        small = (abs(na - alpha) <= 4.0 * _EPS * abs(alpha)
                 and abs(no - omega) <= 4.0 * _EPS * abs(omega))
        alpha, omega, f0 = na, no, f1
        if small:
            break
    return alpha, omega, f0


@numba.njit(cache=True, nogil=True)
def polish_lad(phi, alpha, omega, a, b, u, m2_full, w, box, max_rounds):
    """Alternate the exact phi update and Newton on ``(alpha, omega)``.

    Moves are accepted only when the criterion does not rise beyond
    rounding. Pins the estimate down far below the simplex tolerance, where
    the criterion is otherwise flat to working precision.
    Returns ``(phi, alpha, omega, f)``.
    """
    # the 0.5*m2 terms do not depend on theta; leaving them out keeps the
    # rounding noise of the comparisons at the scale of the varying part
    m2 = np.zeros_like(m2_full)
    f = criterion(phi, alpha, omega, a, b, u, m2, w, LAD)
    for _ in range(max_rounds):
        p_new = _weighted_median_phi(alpha, omega, a, b, u, w, box[0], box[1], phi)
        moved = p_new != phi
        if moved:
            f_new = criterion(p_new, alpha, omega, a, b, u, m2, w, LAD)
            if f_new <= f + 8.0 * _EPS * (abs(f) + 1.0):
                phi, f = p_new, f_new
            else:
                moved = False
        a_new, o_new, f_new = _newton_scale(phi, alpha, omega, a, b, u, m2, w, box, f)
        changed = a_new != alpha or o_new != omega
        alpha, omega, f = a_new, o_new, f_new
        if not moved and not changed:
            break
    return phi, alpha, omega, criterion(phi, alpha, omega, a, b, u, m2_full, w, LAD)
