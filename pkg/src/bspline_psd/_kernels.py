"""Compiled inner loops shared by the spline, prior and sampler modules.

Everything here works on plain arrays so numba can cache the machine code.
Randomness never happens inside these functions: callers pass uniform and
gamma variates in, which keeps each chain's stream independent of how the
sweeps are chunked.
"""

import math

import numpy as np
from numba import njit

DEGENERATE_TOL = 1e-12

BSPLINE = 0
BERNSTEIN = 1

# fpar layout
F_MG, F_MH, F_THETA, F_ALPHA, F_BETA, F_TINV, F_CW, F_CSCALE = range(8)
F_LOGZK, F_GA, F_GB, F_HA, F_HB = range(8, 13)
# ipar layout
I_FAMILY, I_DEGREE, I_KMIN, I_KMAX = range(4)


# ---------------------------------------------------------------- splines


@njit(cache=True)
def find_span(knots, k, omega):
    """Index i with knots[i] <= omega < knots[i+1]; right-closed at 1."""
    if omega >= knots[k]:
        # last knot strictly below the right boundary
        i = k - 1
        while i > 0 and knots[i] >= knots[k]:
            i -= 1
        return i
    lo = 0
    hi = k + 1
    # largest i in [0, k] with knots[i] <= omega
    while hi - lo > 1:
        mid = (lo + hi) // 2
        if knots[mid] <= omega:
            lo = mid
        else:
            hi = mid
    return lo


@njit(cache=True)
def basis_nonzero(knots, span, r, omega, out, left, right):
    out[0] = 1.0
    for j in range(1, r + 1):
        left[j] = omega - knots[span + 1 - j]
        right[j] = knots[span + j] - omega
        saved = 0.0
        for q in range(j):
            # ratios are bounded by one, so subnormal knot gaps cannot overflow
            den = right[q + 1] + left[j - q]
            oq = out[q]
            out[q] = saved + oq * (right[q + 1] / den)
            saved = oq * (left[j - q] / den)
        out[j] = saved


@njit(cache=True)
def fill_basis(knots, k, r, omegas, spans, vals):
    """Nonzero basis values at each omega; row m covers functions spans[m]-r..spans[m]."""
    left = np.empty(r + 1)
    right = np.empty(r + 1)
    tmp = np.empty(r + 1)
    for m in range(omegas.shape[0]):
        sp = find_span(knots, k, omegas[m])
        spans[m] = sp
        basis_nonzero(knots, sp, r, omegas[m], tmp, left, right)
        for q in range(r + 1):
            vals[m, q] = tmp[q]


@njit(cache=True)
def basis_matrix(knots, r, omegas):
    k = knots.shape[0] - r - 1
    m = omegas.shape[0]
    spans = np.empty(m, dtype=np.int64)
    vals = np.empty((m, r + 1))
    fill_basis(knots, k, r, omegas, spans, vals)
    out = np.zeros((m, k))
    for i in range(m):
        for q in range(r + 1):
            out[i, spans[i] - r + q] = vals[i, q]
    return out


@njit(cache=True)
def normalizers(knots, k, r, out):
    for b in range(k):
        out[b] = (knots[b + r + 1] - knots[b]) / (r + 1)


@njit(cache=True)
def effective_weights(w, norms, k, out):
    """Move weight off degenerate splines, proportionally onto the rest."""
    total = 0.0
    good = 0.0
    ngood = 0
    for b in range(k):
        total += w[b]
        if norms[b] > DEGENERATE_TOL:
            good += w[b]
            ngood += 1
    if ngood == 0:
        raise ValueError("every B-spline in the basis is degenerate")
    if good > 0.0:
        scale = total / good
        for b in range(k):
            out[b] = w[b] * scale if norms[b] > DEGENERATE_TOL else 0.0
    else:
        # all mass sits on degenerate splines: spread it evenly
        share = total / ngood
        for b in range(k):
            out[b] = share if norms[b] > DEGENERATE_TOL else 0.0


@njit(cache=True)
def knots_from_diffs(diffs, nd, r, out):
    total = 0.0
    for j in range(nd):
        total += diffs[j]
    k = nd + r
    for i in range(r + 1):
        out[i] = 0.0
    c = 0.0
    for m in range(1, nd):
        c += diffs[m - 1] / total
        out[r + m] = c if c < 1.0 else 1.0
    for i in range(k, k + r + 1):
        out[i] = 1.0


# ------------------------------------------------------------ stick-breaking


@njit(cache=True)
def stick_masses(sticks, out):
    rest = 1.0
    for l in range(sticks.shape[0]):
        out[l + 1] = rest * sticks[l]
        rest *= 1.0 - sticks[l]
    out[0] = rest


@njit(cache=True)
def bin_index(a, nbins):
    """0-based bin of atom a among ((j-1)/nbins, j/nbins]; 0 goes to the first bin."""
    j = int(math.ceil(a * nbins))
    if j < 1:
        j = 1
    if j > nbins:
        j = nbins
    while j > 1 and a <= (j - 1) / nbins:
        j -= 1
    while j < nbins and a > j / nbins:
        j += 1
    return j - 1


@njit(cache=True)
def bin_masses(masses, atoms, nbins, out):
    for j in range(nbins):
        out[j] = 0.0
    for l in range(masses.shape[0]):
        out[bin_index(atoms[l], nbins)] += masses[l]


# --------------------------------------------------------------- bernstein


@njit(cache=True)
def beta_row(j, k, logw, log1mw, out):
    # Beta(j+1, k-j) density, 0-based j
    c = math.log(k) + math.lgamma(k) - math.lgamma(j + 1) - math.lgamma(k - j)
    for m in range(logw.shape[0]):
        out[m] = math.exp(c + j * logw[m] + (k - j - 1) * log1mw[m])


@njit(cache=True)
def bernstein_s(w, k, rows, valid, logw, log1mw, s):
    s[:] = 0.0
    for j in range(k):
        if w[j] > 0.0:
            if not valid[j]:
                beta_row(j, k, logw, log1mw, rows[j])
                valid[j] = True
            wj = w[j]
            row = rows[j]
            for m in range(s.shape[0]):
                s[m] += wj * row[m]


# ---------------------------------------------------------------- bspline


@njit(cache=True)
def bspline_s(w, k, r, knots, spans, vals, norms, weff, s):
    normalizers(knots, k, r, norms)
    effective_weights(w, norms, k, weff)
    for m in range(s.shape[0]):
        acc = 0.0
        base = spans[m] - r
        for q in range(r + 1):
            b = base + q
            if norms[b] > DEGENERATE_TOL:
                acc += weff[b] / norms[b] * vals[m, q]
        s[m] = acc


@njit(cache=True)
def whittle_parts(s, pg):
    """(sum log s, sum I/s); (nan, nan) flags a non-positive density."""
    a = 0.0
    b = 0.0
    for m in range(s.shape[0]):
        if not s[m] > 0.0:
            return np.nan, np.nan
        a += math.log(s[m])
        b += pg[m] / s[m]
    if not (np.isfinite(a) and np.isfinite(b)):
        return np.nan, np.nan
    return a, b


@njit(cache=True)
def loglik_from_parts(a, b, tau, nfreq):
    if np.isnan(a):
        return -np.inf
    return -(nfreq * math.log(tau) + a + b / tau)


# ------------------------------------------------------------- proposals


@njit(cache=True)
def circular(x, eps, unif):
    y = x + eps * (2.0 * unif - 1.0)
    if y > 1.0:
        y = y - math.floor(y)
    elif y < 0.0:
        y = y + 1.0
        if y < 0.0:
            y = y - math.floor(y)
    return y


@njit(cache=True)
def k_step(a, b, cauchy_weight, scale, bound):
    """Integer jump for k from two uniforms.

    With probability 1 - cauchy_weight the jump is uniform on {-1, 0, 1};
    otherwise it is a Cauchy(0, scale) draw rounded half away from zero and
    conditioned on being nonzero (inverse cdf on the tails beyond +-0.5).
    """
    if a < 1.0 - cauchy_weight:
        st = int(math.floor(3.0 * b)) - 1
        if st > 1:
            st = 1
        return st
    c0 = 0.5 - math.atan(0.5 / scale) / math.pi
    if b < 0.5:
        q = 2.0 * b * c0
    else:
        q = 1.0 - c0 + (b - 0.5) * 2.0 * c0
    if q <= 0.0:
        return -bound
    if q >= 1.0:
        return bound
    xval = scale * math.tan(math.pi * (q - 0.5))
    mag = math.floor(abs(xval) + 0.5)
    if mag > bound:
        mag = bound
    if mag < 1.0:
        mag = 1.0
    st = int(mag)
    return st if xval > 0 else -st


@njit(cache=True)
def log_beta_ratio(a, b, new, old):
    out = 0.0
    if a != 1.0:
        out += (a - 1.0) * (math.log(new) - math.log(old)) if new > 0.0 else -np.inf
    if b != 1.0 and out > -np.inf:
        out += (b - 1.0) * (math.log1p(-new) - math.log1p(-old)) if new < 1.0 else -np.inf
    return out


# ------------------------------------------------------------------ model


@njit(cache=True)
def model_s(family, v, z, u, x, k, r, omegas, logw, log1mw,
            pbuf, qbuf, w, d, knots, spans, vals, norms, weff,
            rows, valid, s):
    """Unit-mass mixture density at omegas for the given parameters."""
    stick_masses(v, pbuf)
    bin_masses(pbuf, z, k, w)
    if family == BSPLINE:
        nd = k - r
        stick_masses(u, qbuf)
        bin_masses(qbuf, x, nd, d)
        knots_from_diffs(d, nd, r, knots)
        fill_basis(knots, k, r, omegas, spans, vals)
        bspline_s(w, k, r, knots, spans, vals, norms, weff, s)
    else:
        valid[:k] = False
        bernstein_s(w, k, rows, valid, logw, log1mw, s)


@njit(cache=True)
def evaluate(family, v, z, u, x, k, r, omegas):
    """Mixture density on an arbitrary grid (no caching)."""
    m = omegas.shape[0]
    kmax = max(k, 1)
    logw = np.empty(m)
    log1mw = np.empty(m)
    for i in range(m):
        logw[i] = math.log(omegas[i]) if omegas[i] > 0 else -np.inf
        log1mw[i] = math.log1p(-omegas[i]) if omegas[i] < 1 else -np.inf
    s = np.empty(m)
    if family == BERNSTEIN:
        w = np.empty(k)
        p = np.empty(v.shape[0] + 1)
        stick_masses(v, p)
        bin_masses(p, z, k, w)
        s[:] = 0.0
        row = np.empty(m)
        for j in range(k):
            if w[j] > 0.0:
                # endpoint-safe beta density
                c = math.log(k) + math.lgamma(k) - math.lgamma(j + 1) - math.lgamma(k - j)
                for i in range(m):
                    t1 = j * logw[i] if j > 0 else 0.0
                    t2 = (k - j - 1) * log1mw[i] if k - j - 1 > 0 else 0.0
                    row[i] = math.exp(c + t1 + t2)
                for i in range(m):
                    s[i] += w[j] * row[i]
        return s
    pbuf = np.empty(v.shape[0] + 1)
    qbuf = np.empty(u.shape[0] + 1)
    w = np.empty(kmax)
    d = np.empty(kmax)
    knots = np.empty(kmax + r + 1)
    spans = np.empty(m, dtype=np.int64)
    vals = np.empty((m, r + 1))
    norms = np.empty(kmax)
    weff = np.empty(kmax)
    rows = np.empty((1, 1))
    valid = np.zeros(1, dtype=np.bool_)
    model_s(family, v, z, u, x, k, r, omegas, logw, log1mw,
            pbuf, qbuf, w, d, knots, spans, vals, norms, weff, rows, valid, s)
    return s


@njit(cache=True)
def advance(v, z, u, x, kt, taut, omegas, pg, fpar, ipar,
            eps_v, eps_z, eps_u, eps_x, unif, gam, store_idx,
            out_psd, out_k, out_tau, out_ll, out_v, out_z, out_u, out_x,
            counts):
    """Run unif.shape[0] Metropolis-within-Gibbs sweeps in place.

    State lives in v, z, u, x, kt[0], taut[0]. Row ``it`` of ``unif`` holds
    every uniform used by sweep ``it``; ``gam[it]`` is a Gamma(alpha + t N)
    variate for the tau draw. Sweeps with ``store_idx[it] >= 0`` are written
    to that row of the out_* arrays. counts[block] = (proposed, accepted)
    for blocks v, z, u, x, k. Returns the final untempered log-likelihood.
    """
    family = ipar[I_FAMILY]
    r = ipar[I_DEGREE]
    kmin = ipar[I_KMIN]
    kmax = ipar[I_KMAX]
    mg = fpar[F_MG]
    mh = fpar[F_MH]
    theta = fpar[F_THETA]
    beta_tau = fpar[F_BETA]
    t = fpar[F_TINV]
    cw = fpar[F_CW]
    cscale = fpar[F_CSCALE]
    ga = fpar[F_GA]
    gb = fpar[F_GB]
    ha = fpar[F_HA]
    hb = fpar[F_HB]

    nf = omegas.shape[0]
    lg = v.shape[0]
    lh = u.shape[0]
    logw = np.empty(nf)
    log1mw = np.empty(nf)
    for m in range(nf):
        logw[m] = math.log(omegas[m])
        log1mw[m] = math.log1p(-omegas[m])

    pbuf = np.empty(lg + 1)
    qbuf = np.empty(lh + 1)
    kcap = kmax + 1
    # current (a) and scratch (b) caches, swapped on acceptance
    w_a = np.empty(kcap)
    w_b = np.empty(kcap)
    d_a = np.empty(kcap)
    d_b = np.empty(kcap)
    kn_a = np.empty(kcap + r + 1)
    kn_b = np.empty(kcap + r + 1)
    sp_a = np.empty(nf, dtype=np.int64)
    sp_b = np.empty(nf, dtype=np.int64)
    va_a = np.empty((nf, r + 1))
    va_b = np.empty((nf, r + 1))
    no_a = np.empty(kcap)
    no_b = np.empty(kcap)
    we = np.empty(kcap)
    s_a = np.empty(nf)
    s_b = np.empty(nf)
    if family == BERNSTEIN:
        rows_a = np.empty((kcap, nf))
        rows_b = np.empty((kcap, nf))
    else:
        rows_a = np.empty((1, 1))
        rows_b = np.empty((1, 1))
    val_a = np.zeros(kcap, dtype=np.bool_)
    val_b = np.zeros(kcap, dtype=np.bool_)

    k = kt[0]
    tau = taut[0]
    model_s(family, v, z, u, x, k, r, omegas, logw, log1mw, pbuf, qbuf,
            w_a, d_a, kn_a, sp_a, va_a, no_a, we, rows_a, val_a, s_a)
    pa, pb = whittle_parts(s_a, pg)
    stale = False
    qa = 0.0
    qb = 0.0

    for it in range(unif.shape[0]):
        row = unif[it]
        pos = 0

        # weight sticks and atoms
        for blk in range(2):
            n_par = lg if blk == 0 else lg + 1
            for l in range(n_par):
                ua = row[pos + 1]
                if blk == 0:
                    old = v[l]
                    new = circular(old, eps_v[l], row[pos])
                    dlp = log_beta_ratio(1.0, mg, new, old)
                else:
                    old = z[l]
                    new = circular(old, eps_z[l], row[pos])
                    dlp = log_beta_ratio(ga, gb, new, old)
                pos += 2
                counts[blk, 0] += 1
                if dlp == -np.inf:
                    continue
                if blk == 0:
                    v[l] = new
                else:
                    z[l] = new
                # an atom moving within its bin leaves the weights bit-identical
                same = blk == 1 and bin_index(new, k) == bin_index(old, k)
                if t > 0.0 and not same:
                    stick_masses(v, pbuf)
                    bin_masses(pbuf, z, k, w_b)
                    if family == BSPLINE:
                        bspline_s(w_b, k, r, kn_a, sp_a, va_a, no_a, we, s_b)
                    else:
                        bernstein_s(w_b, k, rows_a, val_a, logw, log1mw, s_b)
                    qa, qb = whittle_parts(s_b, pg)
                    if np.isnan(qa):
                        loga = -np.inf
                    else:
                        ll_new = loglik_from_parts(qa, qb, tau, nf)
                        ll_old = loglik_from_parts(pa, pb, tau, nf)
                        loga = t * (ll_new - ll_old) + dlp
                else:
                    loga = dlp
                if math.log(ua) < loga:
                    counts[blk, 1] += 1
                    if same:
                        pass
                    elif t > 0.0:
                        w_a, w_b = w_b, w_a
                        s_a, s_b = s_b, s_a
                        pa, pb = qa, qb
                    else:
                        stale = True
                else:
                    if blk == 0:
                        v[l] = old
                    else:
                        z[l] = old

        # knot sticks and atoms
        for blk in range(2, 4):
            n_par = lh if blk == 2 else lh + 1
            if family != BSPLINE:
                pos += 2 * n_par
                continue
            nd = k - r
            for l in range(n_par):
                ua = row[pos + 1]
                if blk == 2:
                    old = u[l]
                    new = circular(old, eps_u[l], row[pos])
                    dlp = log_beta_ratio(1.0, mh, new, old)
                else:
                    old = x[l]
                    new = circular(old, eps_x[l], row[pos])
                    dlp = log_beta_ratio(ha, hb, new, old)
                pos += 2
                counts[blk, 0] += 1
                if dlp == -np.inf:
                    continue
                if blk == 2:
                    u[l] = new
                else:
                    x[l] = new
                same = blk == 3 and bin_index(new, nd) == bin_index(old, nd)
                if t > 0.0 and not same:
                    stick_masses(u, qbuf)
                    bin_masses(qbuf, x, nd, d_b)
                    knots_from_diffs(d_b, nd, r, kn_b)
                    fill_basis(kn_b, k, r, omegas, sp_b, va_b)
                    bspline_s(w_a, k, r, kn_b, sp_b, va_b, no_b, we, s_b)
                    qa, qb = whittle_parts(s_b, pg)
                    if np.isnan(qa):
                        loga = -np.inf
                    else:
                        ll_new = loglik_from_parts(qa, qb, tau, nf)
                        ll_old = loglik_from_parts(pa, pb, tau, nf)
                        loga = t * (ll_new - ll_old) + dlp
                else:
                    loga = dlp
                if math.log(ua) < loga:
                    counts[blk, 1] += 1
                    if same:
                        pass
                    elif t > 0.0:
                        d_a, d_b = d_b, d_a
                        kn_a, kn_b = kn_b, kn_a
                        sp_a, sp_b = sp_b, sp_a
                        va_a, va_b = va_b, va_a
                        no_a, no_b = no_b, no_a
                        s_a, s_b = s_b, s_a
                        pa, pb = qa, qb
                    else:
                        stale = True
                else:
                    if blk == 2:
                        u[l] = old
                    else:
                        x[l] = old

        # number of mixture components
        step = k_step(row[pos], row[pos + 1], cw, cscale, kmax + 1)
        ua = row[pos + 2]
        pos += 3
        counts[4, 0] += 1
        kp = k + step
        if kmin <= kp <= kmax:
            if step == 0:
                counts[4, 1] += 1
            else:
                dlp = -theta * (kp * kp - k * k)
                if t > 0.0:
                    val_b[:kp] = False
                    model_s(family, v, z, u, x, kp, r, omegas, logw, log1mw,
                            pbuf, qbuf, w_b, d_b, kn_b, sp_b, va_b, no_b, we,
                            rows_b, val_b, s_b)
                    qa, qb = whittle_parts(s_b, pg)
                    if np.isnan(qa):
                        loga = -np.inf
                    else:
                        ll_new = loglik_from_parts(qa, qb, tau, nf)
                        ll_old = loglik_from_parts(pa, pb, tau, nf)
                        loga = t * (ll_new - ll_old) + dlp
                else:
                    loga = dlp
                if math.log(ua) < loga:
                    counts[4, 1] += 1
                    k = kp
                    if t > 0.0:
                        w_a, w_b = w_b, w_a
                        d_a, d_b = d_b, d_a
                        kn_a, kn_b = kn_b, kn_a
                        sp_a, sp_b = sp_b, sp_a
                        va_a, va_b = va_b, va_a
                        no_a, no_b = no_b, no_a
                        s_a, s_b = s_b, s_a
                        rows_a, rows_b = rows_b, rows_a
                        val_a, val_b = val_b, val_a
                        pa, pb = qa, qb
                    else:
                        stale = True

        if stale:
            val_a[:k] = False
            model_s(family, v, z, u, x, k, r, omegas, logw, log1mw, pbuf,
                    qbuf, w_a, d_a, kn_a, sp_a, va_a, no_a, we, rows_a,
                    val_a, s_a)
            pa, pb = whittle_parts(s_a, pg)
            stale = False

        # conjugate scale update
        rate = beta_tau
        if t > 0.0:
            rate += t * pb
        tau = rate / gam[it]

        o = store_idx[it]
        if o >= 0:
            for m in range(nf):
                out_psd[o, m] = tau * s_a[m]
            out_k[o] = k
            out_tau[o] = tau
            out_ll[o] = loglik_from_parts(pa, pb, tau, nf)
            out_v[o, :] = v
            out_z[o, :] = z
            out_u[o, :] = u
            out_x[o, :] = x

    kt[0] = k
    taut[0] = tau
    return loglik_from_parts(pa, pb, tau, nf)
