"""Compiled inner loops for the collision-integral quadratures.

Every routine here is a plain pair loop over velocity nodes with the
sphere integral evaluated by the (theta, omega) product rule: sigma =
cos(theta) u_hat + sin(theta) omega, with omega orthogonal to u_hat.
Writing m = (v + v*)/2 and r = |v - v*|, the post-collisional pair is
v' = m + (r/2) sigma and v*' = m - (r/2) sigma.

Interpolation conventions, on purpose:

* Distribution values (gain factors, convolution-type brackets) use
  multilinear interpolation with the zero extension outside the box,
  matching grid.interpolate.
* Test functions and coercivity arguments use an edge-clamped variant
  whose brackets are accumulated corner-by-corner as weighted
  differences, so a constant input yields an exactly zero bracket in
  floating point. That exactness is what makes the discrete mass
  conservation identity hold to roundoff instead of to quadrature
  error.
* The identity checks that sample single output points (cancellation,
  change of variables) read the state through three-point-per-axis
  quadratic interpolation. Those integrals multiply an O(h^2)
  interpolation bias by the full angular mass of b, which for small
  theta_min is orders of magnitude larger than the result; one extra
  order of accuracy puts the bias back below the quadrature error.

The diagonal v = v* is skipped everywhere: the relative speed vanishes,
so |u|^gamma is singular, but every bracket carries a factor that
vanishes identically there (gain equals loss, primed equals unprimed).

Pruning. Callers pass active-node index lists plus bounding balls, and
magnitude thresholds. Pair-level rejection for gain terms uses two
exact necessary conditions, v' + v*' = v + v* and |v' - v*'| = |v - v*|,
plus a radial envelope bound: since |v' - v| = |u| sin(theta/2), the
gain factors are bounded by the largest state value at distance
>= dist(v, center) - |u| sin(theta_max / 2) from the support center.
Quadratic forms prune the theta loop instead, using
|v' - v*| = |u| cos(theta/2) to bracket the angles that can land v'
inside the support ball.

All loops are single-threaded and accumulate per-output-node partials
in fixed order, so results are bitwise reproducible.
"""

from __future__ import annotations

import numpy as np
from numba import njit

__all__ = [
    "qweak_d3",
    "qweak_d2",
    "conservation_d3",
    "conservation_d2",
    "qstrong_d3",
    "qstrong_d2",
    "quad_form_d3",
    "quad_form_d2",
    "cancellation_lhs_d3",
    "cancellation_lhs_d2",
    "changevar_lhs_d3",
    "changevar_lhs_d2",
    "weighted_pair_form_d3",
    "weighted_pair_form_d2",
]


@njit(cache=True, inline="always")
def _interp3_zero(arr, n, rbox, h, x, y, z):
    """Trilinear value of arr at (x, y, z), zero outside the box."""
    tx = (x + rbox) / h - 0.5
    ty = (y + rbox) / h - 0.5
    tz = (z + rbox) / h - 0.5
    ix = int(np.floor(tx))
    iy = int(np.floor(ty))
    iz = int(np.floor(tz))
    fx = tx - ix
    fy = ty - iy
    fz = tz - iz
    if ix >= 0 and ix <= n - 2 and iy >= 0 and iy <= n - 2 and iz >= 0 and iz <= n - 2:
        c00 = arr[ix, iy, iz] * (1.0 - fz) + arr[ix, iy, iz + 1] * fz
        c01 = arr[ix, iy + 1, iz] * (1.0 - fz) + arr[ix, iy + 1, iz + 1] * fz
        c10 = arr[ix + 1, iy, iz] * (1.0 - fz) + arr[ix + 1, iy, iz + 1] * fz
        c11 = arr[ix + 1, iy + 1, iz] * (1.0 - fz) + arr[ix + 1, iy + 1, iz + 1] * fz
        return (c00 * (1.0 - fy) + c01 * fy) * (1.0 - fx) + (c10 * (1.0 - fy) + c11 * fy) * fx
    if ix < -1 or ix > n - 1 or iy < -1 or iy > n - 1 or iz < -1 or iz > n - 1:
        return 0.0
    val = 0.0
    for dx in range(2):
        px = ix + dx
        if px < 0 or px >= n:
            continue
        wx = fx if dx == 1 else 1.0 - fx
        for dy in range(2):
            py = iy + dy
            if py < 0 or py >= n:
                continue
            wy = fy if dy == 1 else 1.0 - fy
            for dz in range(2):
                pz = iz + dz
                if pz < 0 or pz >= n:
                    continue
                wz = fz if dz == 1 else 1.0 - fz
                val += wx * wy * wz * arr[px, py, pz]
    return val


@njit(cache=True, inline="always")
def _interp2_zero(arr, n, rbox, h, x, y):
    """Bilinear value of arr at (x, y), zero outside the box."""
    tx = (x + rbox) / h - 0.5
    ty = (y + rbox) / h - 0.5
    ix = int(np.floor(tx))
    iy = int(np.floor(ty))
    fx = tx - ix
    fy = ty - iy
    if ix >= 0 and ix <= n - 2 and iy >= 0 and iy <= n - 2:
        return (arr[ix, iy] * (1.0 - fy) + arr[ix, iy + 1] * fy) * (1.0 - fx) + (
            arr[ix + 1, iy] * (1.0 - fy) + arr[ix + 1, iy + 1] * fy
        ) * fx
    if ix < -1 or ix > n - 1 or iy < -1 or iy > n - 1:
        return 0.0
    val = 0.0
    for dx in range(2):
        px = ix + dx
        if px < 0 or px >= n:
            continue
        wx = fx if dx == 1 else 1.0 - fx
        for dy in range(2):
            py = iy + dy
            if py < 0 or py >= n:
                continue
            wy = fy if dy == 1 else 1.0 - fy
            val += wx * wy * arr[px, py]
    return val


@njit(cache=True, inline="always")
def _quad_axis(t, n):
    """Center index and offset for three-point quadratic interpolation."""
    ic = int(np.floor(t + 0.5))
    if ic < 1:
        ic = 1
    elif ic > n - 2:
        ic = n - 2
    return ic, t - ic


@njit(cache=True, inline="always")
def _interp3_quad(arr, n, rbox, h, x, y, z):
    """Triquadratic value of arr at (x, y, z), zero outside the box.

    Exact on polynomials of degree two per axis; the sub-cell error
    gradient is O(h^2) instead of O(h), which is what the singular
    angular mass amplifies in the identity checks.
    """
    tx = (x + rbox) / h - 0.5
    ty = (y + rbox) / h - 0.5
    tz = (z + rbox) / h - 0.5
    if tx < 0.0 or tx > n - 1.0 or ty < 0.0 or ty > n - 1.0 or tz < 0.0 or tz > n - 1.0:
        return 0.0
    ix, dx = _quad_axis(tx, n)
    iy, dy = _quad_axis(ty, n)
    iz, dz = _quad_axis(tz, n)
    wxm = 0.5 * dx * (dx - 1.0)
    wx0 = (1.0 - dx) * (1.0 + dx)
    wxp = 0.5 * dx * (dx + 1.0)
    wym = 0.5 * dy * (dy - 1.0)
    wy0 = (1.0 - dy) * (1.0 + dy)
    wyp = 0.5 * dy * (dy + 1.0)
    wzm = 0.5 * dz * (dz - 1.0)
    wz0 = (1.0 - dz) * (1.0 + dz)
    wzp = 0.5 * dz * (dz + 1.0)
    val = 0.0
    for a in range(3):
        wx = wxm if a == 0 else (wx0 if a == 1 else wxp)
        pa = ix + a - 1
        for b in range(3):
            wxy = wx * (wym if b == 0 else (wy0 if b == 1 else wyp))
            pb = iy + b - 1
            val += wxy * (
                wzm * arr[pa, pb, iz - 1] + wz0 * arr[pa, pb, iz] + wzp * arr[pa, pb, iz + 1]
            )
    return val


@njit(cache=True, inline="always")
def _interp2_quad(arr, n, rbox, h, x, y):
    """Biquadratic value of arr at (x, y), zero outside the box."""
    tx = (x + rbox) / h - 0.5
    ty = (y + rbox) / h - 0.5
    if tx < 0.0 or tx > n - 1.0 or ty < 0.0 or ty > n - 1.0:
        return 0.0
    ix, dx = _quad_axis(tx, n)
    iy, dy = _quad_axis(ty, n)
    wxm = 0.5 * dx * (dx - 1.0)
    wx0 = (1.0 - dx) * (1.0 + dx)
    wxp = 0.5 * dx * (dx + 1.0)
    wym = 0.5 * dy * (dy - 1.0)
    wy0 = (1.0 - dy) * (1.0 + dy)
    wyp = 0.5 * dy * (dy + 1.0)
    val = 0.0
    for a in range(3):
        wx = wxm if a == 0 else (wx0 if a == 1 else wxp)
        pa = ix + a - 1
        val += wx * (wym * arr[pa, iy - 1] + wy0 * arr[pa, iy] + wyp * arr[pa, iy + 1])
    return val


@njit(cache=True, inline="always")
def _clamp_axis(t, n):
    """Clamped base index and fraction for edge-extended interpolation."""
    i = int(np.floor(t))
    f = t - i
    if i < 0:
        i = 0
        f = 0.0
    elif i > n - 2:
        i = n - 2
        f = 1.0
    return i, f


@njit(cache=True, inline="always")
def _diff3_clamped(arr, n, rbox, h, x, y, z, ref):
    """Edge-clamped trilinear value of arr at (x,y,z) minus ref.

    Accumulated as a weighted sum of (corner - ref) so the result is an
    exact floating-point zero whenever all corners equal ref.
    """
    ix, fx = _clamp_axis((x + rbox) / h - 0.5, n)
    iy, fy = _clamp_axis((y + rbox) / h - 0.5, n)
    iz, fz = _clamp_axis((z + rbox) / h - 0.5, n)
    out = 0.0
    out += (1.0 - fx) * (1.0 - fy) * (1.0 - fz) * (arr[ix, iy, iz] - ref)
    out += (1.0 - fx) * (1.0 - fy) * fz * (arr[ix, iy, iz + 1] - ref)
    out += (1.0 - fx) * fy * (1.0 - fz) * (arr[ix, iy + 1, iz] - ref)
    out += (1.0 - fx) * fy * fz * (arr[ix, iy + 1, iz + 1] - ref)
    out += fx * (1.0 - fy) * (1.0 - fz) * (arr[ix + 1, iy, iz] - ref)
    out += fx * (1.0 - fy) * fz * (arr[ix + 1, iy, iz + 1] - ref)
    out += fx * fy * (1.0 - fz) * (arr[ix + 1, iy + 1, iz] - ref)
    out += fx * fy * fz * (arr[ix + 1, iy + 1, iz + 1] - ref)
    return out


@njit(cache=True, inline="always")
def _diff2_clamped(arr, n, rbox, h, x, y, ref):
    """Edge-clamped bilinear value of arr at (x,y) minus ref."""
    ix, fx = _clamp_axis((x + rbox) / h - 0.5, n)
    iy, fy = _clamp_axis((y + rbox) / h - 0.5, n)
    out = 0.0
    out += (1.0 - fx) * (1.0 - fy) * (arr[ix, iy] - ref)
    out += (1.0 - fx) * fy * (arr[ix, iy + 1] - ref)
    out += fx * (1.0 - fy) * (arr[ix + 1, iy] - ref)
    out += fx * fy * (arr[ix + 1, iy + 1] - ref)
    return out


@njit(cache=True, inline="always")
def _clamp_coord(vp, n, rbox, h):
    """Clamped-interpolant value of the coordinate function at vp.

    Linear interpolation reproduces linear functions, so inside the box
    the value is vp itself; beyond the outermost nodes it saturates at
    the edge node. The second return value is the sub-cell fraction
    used for the quadratic-correction term (zero at and beyond nodes).
    """
    t = (vp + rbox) / h - 0.5
    if t <= 0.0:
        return 0.5 * h - rbox, 0.0
    if t >= n - 1.0:
        return rbox - 0.5 * h, 0.0
    fr = t - int(np.floor(t))
    return vp, fr


@njit(cache=True)
def _frame3(uhx, uhy, uhz):
    """Orthonormal pair spanning the plane orthogonal to a unit vector."""
    ax = abs(uhx)
    ay = abs(uhy)
    az = abs(uhz)
    if ax <= ay and ax <= az:
        # cross(x_hat, u_hat)
        e1x, e1y, e1z = 0.0, -uhz, uhy
    elif ay <= az:
        e1x, e1y, e1z = uhz, 0.0, -uhx
    else:
        e1x, e1y, e1z = -uhy, uhx, 0.0
    nrm = np.sqrt(e1x * e1x + e1y * e1y + e1z * e1z)
    e1x /= nrm
    e1y /= nrm
    e1z /= nrm
    e2x = uhy * e1z - uhz * e1y
    e2y = uhz * e1x - uhx * e1z
    e2z = uhx * e1y - uhy * e1x
    return e1x, e1y, e1z, e2x, e2y, e2z


@njit(cache=True)
def qweak_d3(g, f, phis, iv, jv, n, rbox, h, gamma, prodthr,
             wb, ct, st, caz, saz, waz, out):
    """Weak-form pair sums: integrand B g(v*) f(v) [phi(v') - phi(v)].

    iv indexes the support of f (the v variable), jv the support of g.
    Pairs with |g f| below prodthr are dropped; their brackets are the
    same bounded differences as everyone else's, so the induced error
    is below prodthr times the angular mass times the pair count.
    out has shape (len(iv), n_phi); caller scales by h^(2d) and reduces.
    """
    nn = n * n
    nt = wb.shape[0]
    nw = waz.shape[0]
    nphi = phis.shape[0]
    pv = np.empty(nphi)
    for a in range(iv.shape[0]):
        i = iv[a]
        i0 = i // nn
        i1 = (i // n) % n
        i2 = i % n
        vx = -rbox + (i0 + 0.5) * h
        vy = -rbox + (i1 + 0.5) * h
        vz = -rbox + (i2 + 0.5) * h
        fi = f[i0, i1, i2]
        if fi == 0.0:
            continue
        for m in range(nphi):
            pv[m] = phis[m, i0, i1, i2]
        for bidx in range(jv.shape[0]):
            j = jv[bidx]
            if j == i:
                continue
            j0 = j // nn
            j1 = (j // n) % n
            j2 = j % n
            prod = g[j0, j1, j2] * fi
            if prod == 0.0 or abs(prod) < prodthr:
                continue
            wx = -rbox + (j0 + 0.5) * h
            wy = -rbox + (j1 + 0.5) * h
            wz = -rbox + (j2 + 0.5) * h
            ux = vx - wx
            uy = vy - wy
            uz = vz - wz
            r = np.sqrt(ux * ux + uy * uy + uz * uz)
            uhx = ux / r
            uhy = uy / r
            uhz = uz / r
            e1x, e1y, e1z, e2x, e2y, e2z = _frame3(uhx, uhy, uhz)
            coeff = prod * r**gamma
            mx = 0.5 * (vx + wx)
            my = 0.5 * (vy + wy)
            mz = 0.5 * (vz + wz)
            rh = 0.5 * r
            for it in range(nt):
                c = ct[it]
                s = st[it]
                wtb = wb[it]
                for io in range(nw):
                    ox = caz[io] * e1x + saz[io] * e2x
                    oy = caz[io] * e1y + saz[io] * e2y
                    oz = caz[io] * e1z + saz[io] * e2z
                    sx = c * uhx + s * ox
                    sy = c * uhy + s * oy
                    sz = c * uhz + s * oz
                    vpx = mx + rh * sx
                    vpy = my + rh * sy
                    vpz = mz + rh * sz
                    w = wtb * waz[io] * coeff
                    for m in range(nphi):
                        diff = _diff3_clamped(phis[m], n, rbox, h, vpx, vpy, vpz, pv[m])
                        out[a, m] += w * diff
    return out


@njit(cache=True)
def qweak_d2(g, f, phis, iv, jv, n, rbox, h, gamma, prodthr, wb, ct, st, out):
    """Two-dimensional analogue of qweak_d3 (omega = two reflections)."""
    nt = wb.shape[0]
    nphi = phis.shape[0]
    pv = np.empty(nphi)
    for a in range(iv.shape[0]):
        i = iv[a]
        i0 = i // n
        i1 = i % n
        vx = -rbox + (i0 + 0.5) * h
        vy = -rbox + (i1 + 0.5) * h
        fi = f[i0, i1]
        if fi == 0.0:
            continue
        for m in range(nphi):
            pv[m] = phis[m, i0, i1]
        for bidx in range(jv.shape[0]):
            j = jv[bidx]
            if j == i:
                continue
            j0 = j // n
            j1 = j % n
            prod = g[j0, j1] * fi
            if prod == 0.0 or abs(prod) < prodthr:
                continue
            wx = -rbox + (j0 + 0.5) * h
            wy = -rbox + (j1 + 0.5) * h
            ux = vx - wx
            uy = vy - wy
            r = np.sqrt(ux * ux + uy * uy)
            uhx = ux / r
            uhy = uy / r
            coeff = prod * r**gamma
            mx = 0.5 * (vx + wx)
            my = 0.5 * (vy + wy)
            rh = 0.5 * r
            for it in range(nt):
                c = ct[it]
                s = st[it]
                w = wb[it] * coeff
                for sgn in range(2):
                    ss = s if sgn == 0 else -s
                    sx = c * uhx - ss * uhy
                    sy = c * uhy + ss * uhx
                    vpx = mx + rh * sx
                    vpy = my + rh * sy
                    for m in range(nphi):
                        diff = _diff2_clamped(phis[m], n, rbox, h, vpx, vpy, pv[m])
                        out[a, m] += w * diff
    return out


@njit(cache=True)
def conservation_d3(g, f, iv, jv, n, rbox, h, gamma, prodthr,
                    wb, ct, st, caz, saz, waz, out):
    """Momentum and energy rows of the weak form, in closed form.

    The clamped multilinear interpolant of the coordinate function at
    v' is the clamped coordinate itself, and the interpolant of |v|^2
    is sum_k [x_k^2 + fr_k (1 - fr_k) h^2] with fr_k the sub-cell
    fraction. Evaluating those closed forms reproduces exactly what
    table interpolation of the moment test functions would return,
    without touching any test-function array. Columns of out:
    (v_x, v_y, v_z, |v|^2) brackets; caller scales by h^(2d).
    The mass bracket is omitted: every corner difference is 1 - 1.
    """
    nn = n * n
    nt = wb.shape[0]
    nw = waz.shape[0]
    h2 = h * h
    for a in range(iv.shape[0]):
        i = iv[a]
        i0 = i // nn
        i1 = (i // n) % n
        i2 = i % n
        vx = -rbox + (i0 + 0.5) * h
        vy = -rbox + (i1 + 0.5) * h
        vz = -rbox + (i2 + 0.5) * h
        fi = f[i0, i1, i2]
        if fi == 0.0:
            continue
        ei = vx * vx + vy * vy + vz * vz
        for bidx in range(jv.shape[0]):
            j = jv[bidx]
            if j == i:
                continue
            j0 = j // nn
            j1 = (j // n) % n
            j2 = j % n
            prod = g[j0, j1, j2] * fi
            if prod == 0.0 or abs(prod) < prodthr:
                continue
            wx = -rbox + (j0 + 0.5) * h
            wy = -rbox + (j1 + 0.5) * h
            wz = -rbox + (j2 + 0.5) * h
            ux = vx - wx
            uy = vy - wy
            uz = vz - wz
            r = np.sqrt(ux * ux + uy * uy + uz * uz)
            uhx = ux / r
            uhy = uy / r
            uhz = uz / r
            e1x, e1y, e1z, e2x, e2y, e2z = _frame3(uhx, uhy, uhz)
            coeff = prod * r**gamma
            mx = 0.5 * (vx + wx)
            my = 0.5 * (vy + wy)
            mz = 0.5 * (vz + wz)
            rh = 0.5 * r
            for it in range(nt):
                c = ct[it]
                s = st[it]
                wtb = wb[it]
                for io in range(nw):
                    ox = caz[io] * e1x + saz[io] * e2x
                    oy = caz[io] * e1y + saz[io] * e2y
                    oz = caz[io] * e1z + saz[io] * e2z
                    sx = c * uhx + s * ox
                    sy = c * uhy + s * oy
                    sz = c * uhz + s * oz
                    vpx = mx + rh * sx
                    vpy = my + rh * sy
                    vpz = mz + rh * sz
                    xc, frx = _clamp_coord(vpx, n, rbox, h)
                    yc, fry = _clamp_coord(vpy, n, rbox, h)
                    zc, frz = _clamp_coord(vpz, n, rbox, h)
                    ep = (
                        xc * xc + yc * yc + zc * zc
                        + (frx * (1.0 - frx) + fry * (1.0 - fry) + frz * (1.0 - frz)) * h2
                    )
                    w = wtb * waz[io] * coeff
                    out[a, 0] += w * (xc - vx)
                    out[a, 1] += w * (yc - vy)
                    out[a, 2] += w * (zc - vz)
                    out[a, 3] += w * (ep - ei)
    return out


@njit(cache=True)
def conservation_d2(g, f, iv, jv, n, rbox, h, gamma, prodthr, wb, ct, st, out):
    """Two-dimensional analogue of conservation_d3; columns (v_x, v_y, |v|^2)."""
    nt = wb.shape[0]
    h2 = h * h
    for a in range(iv.shape[0]):
        i = iv[a]
        i0 = i // n
        i1 = i % n
        vx = -rbox + (i0 + 0.5) * h
        vy = -rbox + (i1 + 0.5) * h
        fi = f[i0, i1]
        if fi == 0.0:
            continue
        ei = vx * vx + vy * vy
        for bidx in range(jv.shape[0]):
            j = jv[bidx]
            if j == i:
                continue
            j0 = j // n
            j1 = j % n
            prod = g[j0, j1] * fi
            if prod == 0.0 or abs(prod) < prodthr:
                continue
            wx = -rbox + (j0 + 0.5) * h
            wy = -rbox + (j1 + 0.5) * h
            ux = vx - wx
            uy = vy - wy
            r = np.sqrt(ux * ux + uy * uy)
            uhx = ux / r
            uhy = uy / r
            coeff = prod * r**gamma
            mx = 0.5 * (vx + wx)
            my = 0.5 * (vy + wy)
            rh = 0.5 * r
            for it in range(nt):
                c = ct[it]
                s = st[it]
                w0 = wb[it] * coeff
                for sgn in range(2):
                    ss = s if sgn == 0 else -s
                    sx = c * uhx - ss * uhy
                    sy = c * uhy + ss * uhx
                    vpx = mx + rh * sx
                    vpy = my + rh * sy
                    xc, frx = _clamp_coord(vpx, n, rbox, h)
                    yc, fry = _clamp_coord(vpy, n, rbox, h)
                    ep = xc * xc + yc * yc + (frx * (1.0 - frx) + fry * (1.0 - fry)) * h2
                    out[a, 0] += w0 * (xc - vx)
                    out[a, 1] += w0 * (yc - vy)
                    out[a, 2] += w0 * (ep - ei)
    return out


@njit(cache=True, inline="always")
def _env_lookup(env, henv, dlow):
    """Upper bound for state values at distance >= dlow from the center."""
    if dlow <= 0.0:
        return env[0]
    k = int(dlow / henv)
    if k >= env.shape[0]:
        return 0.0
    return env[k]


@njit(cache=True)
def qstrong_d3(f, g, cx, cy, cz, fval, gval, df, dg, n, rbox, h, gamma,
               wb, ct, st, caz, saz, waz, zsx, zsy, zsz, pmid, psep,
               fenv, genv, henv, shmax, thr, out):
    """Strong-form gain-loss sums at the candidate nodes.

    cx/cy/cz are candidate coordinates, fval/gval the state values
    there, df/dg distances to the f and g support centers. zs* is the
    sum of the two support centers; pmid and psep bound |v + v* - zs|
    and |v - v*| for pairs whose gain can touch both supports. fenv and
    genv are suffix-max radial envelopes with bin width henv, and shmax
    is the largest sin(theta/2) of the table; pairs with loss below thr
    and envelope-bounded gain below thr are dropped. out has length
    len(cx); caller scales by h^d.
    """
    nt = wb.shape[0]
    nw = waz.shape[0]
    pmid2 = pmid * pmid
    psep2 = psep * psep
    for a in range(cx.shape[0]):
        vx = cx[a]
        vy = cy[a]
        vz = cz[a]
        fi = fval[a]
        dfi = df[a]
        acc_i = 0.0
        for b in range(cx.shape[0]):
            if b == a:
                continue
            wx = cx[b]
            wy = cy[b]
            wz = cz[b]
            ux = vx - wx
            uy = vy - wy
            uz = vz - wz
            r2 = ux * ux + uy * uy + uz * uz
            sxm = vx + wx - zsx
            sym = vy + wy - zsy
            szm = vz + wz - zsz
            gain_ok = (sxm * sxm + sym * sym + szm * szm <= pmid2) and (r2 <= psep2)
            loss = gval[b] * fi
            if abs(loss) <= thr:
                if not gain_ok:
                    continue
                r = np.sqrt(r2)
                reach = shmax * r
                bound = _env_lookup(fenv, henv, dfi - reach) * _env_lookup(genv, henv, dg[b] - reach)
                if bound <= thr:
                    continue
            else:
                r = np.sqrt(r2)
            uhx = ux / r
            uhy = uy / r
            uhz = uz / r
            e1x, e1y, e1z, e2x, e2y, e2z = _frame3(uhx, uhy, uhz)
            rg = r**gamma
            mx = 0.5 * (vx + wx)
            my = 0.5 * (vy + wy)
            mz = 0.5 * (vz + wz)
            rh = 0.5 * r
            acc = 0.0
            for it in range(nt):
                c = ct[it]
                s = st[it]
                wtb = wb[it]
                for io in range(nw):
                    ox = caz[io] * e1x + saz[io] * e2x
                    oy = caz[io] * e1y + saz[io] * e2y
                    oz = caz[io] * e1z + saz[io] * e2z
                    sx = c * uhx + s * ox
                    sy = c * uhy + s * oy
                    sz = c * uhz + s * oz
                    if gain_ok:
                        fp = _interp3_zero(f, n, rbox, h, mx + rh * sx, my + rh * sy, mz + rh * sz)
                        gp = _interp3_zero(g, n, rbox, h, mx - rh * sx, my - rh * sy, mz - rh * sz)
                        gain = gp * fp
                    else:
                        gain = 0.0
                    acc += wtb * waz[io] * (gain - loss)
            acc_i += rg * acc
        out[a] = acc_i
    return out


@njit(cache=True)
def qstrong_d2(f, g, cx, cy, fval, gval, df, dg, n, rbox, h, gamma,
               wb, ct, st, zsx, zsy, pmid, psep,
               fenv, genv, henv, shmax, thr, out):
    """Two-dimensional analogue of qstrong_d3."""
    nt = wb.shape[0]
    pmid2 = pmid * pmid
    psep2 = psep * psep
    for a in range(cx.shape[0]):
        vx = cx[a]
        vy = cy[a]
        fi = fval[a]
        dfi = df[a]
        acc_i = 0.0
        for b in range(cx.shape[0]):
            if b == a:
                continue
            wx = cx[b]
            wy = cy[b]
            ux = vx - wx
            uy = vy - wy
            r2 = ux * ux + uy * uy
            sxm = vx + wx - zsx
            sym = vy + wy - zsy
            gain_ok = (sxm * sxm + sym * sym <= pmid2) and (r2 <= psep2)
            loss = gval[b] * fi
            if abs(loss) <= thr:
                if not gain_ok:
                    continue
                r = np.sqrt(r2)
                reach = shmax * r
                bound = _env_lookup(fenv, henv, dfi - reach) * _env_lookup(genv, henv, dg[b] - reach)
                if bound <= thr:
                    continue
            else:
                r = np.sqrt(r2)
            uhx = ux / r
            uhy = uy / r
            rg = r**gamma
            mx = 0.5 * (vx + wx)
            my = 0.5 * (vy + wy)
            rh = 0.5 * r
            acc = 0.0
            for it in range(nt):
                c = ct[it]
                s = st[it]
                wtb = wb[it]
                for sgn in range(2):
                    ss = s if sgn == 0 else -s
                    sx = c * uhx - ss * uhy
                    sy = c * uhy + ss * uhx
                    if gain_ok:
                        fp = _interp2_zero(f, n, rbox, h, mx + rh * sx, my + rh * sy)
                        gp = _interp2_zero(g, n, rbox, h, mx - rh * sx, my - rh * sy)
                        gain = gp * fp
                    else:
                        gain = 0.0
                    acc += wtb * (gain - loss)
            acc_i += rg * acc
        out[a] = acc_i
    return out


@njit(cache=True)
def quad_form_d3(gv, fv, jv, n, rbox, h, expo, gthr, theta, wb, ct, st, caz, saz, waz,
                 zfx, zfy, zfz, rhof, out):
    """Coercivity quadratic form: sum of G(v*) |u|^expo [F(v')-F(v)]^2.

    The v loop covers the whole box; jv indexes the support of G, and
    entries with |G| below gthr are skipped. For v outside the F-ball
    the theta loop is restricted to the window where
    |v'-v*| = |u| cos(theta/2) can reach the ball. out has length n^3,
    caller scales by h^(2d).
    """
    nn = n * n
    nt = wb.shape[0]
    nw = waz.shape[0]
    for i in range(n * n * n):
        i0 = i // nn
        i1 = (i // n) % n
        i2 = i % n
        vx = -rbox + (i0 + 0.5) * h
        vy = -rbox + (i1 + 0.5) * h
        vz = -rbox + (i2 + 0.5) * h
        fvi = fv[i0, i1, i2]
        dxf = vx - zfx
        dyf = vy - zfy
        dzf = vz - zfz
        inside = dxf * dxf + dyf * dyf + dzf * dzf <= rhof * rhof
        acc_i = 0.0
        for bidx in range(jv.shape[0]):
            j = jv[bidx]
            if j == i:
                continue
            j0 = j // nn
            j1 = (j // n) % n
            j2 = j % n
            gj = gv[j0, j1, j2]
            if abs(gj) < gthr:
                continue
            wx = -rbox + (j0 + 0.5) * h
            wy = -rbox + (j1 + 0.5) * h
            wz = -rbox + (j2 + 0.5) * h
            ux = vx - wx
            uy = vy - wy
            uz = vz - wz
            r = np.sqrt(ux * ux + uy * uy + uz * uz)
            tlo = 0.0
            thi = 4.0
            if not inside:
                # distance from v* to the F ball along |v' - v*| = r cos(theta/2)
                ax = wx - zfx
                ay = wy - zfy
                az = wz - zfz
                dstar = np.sqrt(ax * ax + ay * ay + az * az)
                chi = (dstar + rhof) / r
                clo = (dstar - rhof) / r
                if clo > 1.0:
                    continue
                if clo < 0.0:
                    clo = 0.0
                if chi < 1.0:
                    tlo = 2.0 * np.arccos(chi)
                if clo < 1.0:
                    thi = 2.0 * np.arccos(clo)
                else:
                    thi = 0.0
            uhx = ux / r
            uhy = uy / r
            uhz = uz / r
            e1x, e1y, e1z, e2x, e2y, e2z = _frame3(uhx, uhy, uhz)
            re = r**expo
            mx = 0.5 * (vx + wx)
            my = 0.5 * (vy + wy)
            mz = 0.5 * (vz + wz)
            rh = 0.5 * r
            acc = 0.0
            for it in range(nt):
                th = theta[it]
                if th < tlo or th > thi:
                    continue
                c = ct[it]
                s = st[it]
                wtb = wb[it]
                for io in range(nw):
                    ox = caz[io] * e1x + saz[io] * e2x
                    oy = caz[io] * e1y + saz[io] * e2y
                    oz = caz[io] * e1z + saz[io] * e2z
                    sx = c * uhx + s * ox
                    sy = c * uhy + s * oy
                    sz = c * uhz + s * oz
                    vpx = mx + rh * sx
                    vpy = my + rh * sy
                    vpz = mz + rh * sz
                    diff = _diff3_clamped(fv, n, rbox, h, vpx, vpy, vpz, fvi)
                    acc += wtb * waz[io] * diff * diff
            acc_i += gj * re * acc
        out[i] = acc_i
    return out


@njit(cache=True)
def quad_form_d2(gv, fv, jv, n, rbox, h, expo, gthr, theta, wb, ct, st,
                 zfx, zfy, rhof, out):
    """Two-dimensional analogue of quad_form_d3."""
    nt = wb.shape[0]
    for i in range(n * n):
        i0 = i // n
        i1 = i % n
        vx = -rbox + (i0 + 0.5) * h
        vy = -rbox + (i1 + 0.5) * h
        fvi = fv[i0, i1]
        dxf = vx - zfx
        dyf = vy - zfy
        inside = dxf * dxf + dyf * dyf <= rhof * rhof
        acc_i = 0.0
        for bidx in range(jv.shape[0]):
            j = jv[bidx]
            if j == i:
                continue
            j0 = j // n
            j1 = j % n
            gj = gv[j0, j1]
            if abs(gj) < gthr:
                continue
            wx = -rbox + (j0 + 0.5) * h
            wy = -rbox + (j1 + 0.5) * h
            ux = vx - wx
            uy = vy - wy
            r = np.sqrt(ux * ux + uy * uy)
            tlo = 0.0
            thi = 4.0
            if not inside:
                ax = wx - zfx
                ay = wy - zfy
                dstar = np.sqrt(ax * ax + ay * ay)
                chi = (dstar + rhof) / r
                clo = (dstar - rhof) / r
                if clo > 1.0:
                    continue
                if clo < 0.0:
                    clo = 0.0
                if chi < 1.0:
                    tlo = 2.0 * np.arccos(chi)
                if clo < 1.0:
                    thi = 2.0 * np.arccos(clo)
                else:
                    thi = 0.0
            uhx = ux / r
            uhy = uy / r
            re = r**expo
            mx = 0.5 * (vx + wx)
            my = 0.5 * (vy + wy)
            rh = 0.5 * r
            acc = 0.0
            for it in range(nt):
                th = theta[it]
                if th < tlo or th > thi:
                    continue
                c = ct[it]
                s = st[it]
                wtb = wb[it]
                for sgn in range(2):
                    ss = s if sgn == 0 else -s
                    sx = c * uhx - ss * uhy
                    sy = c * uhy + ss * uhx
                    vpx = mx + rh * sx
                    vpy = my + rh * sy
                    diff = _diff2_clamped(fv, n, rbox, h, vpx, vpy, fvi)
                    acc += wtb * diff * diff
            acc_i += gj * re * acc
        out[i] = acc_i
    return out


@njit(cache=True)
def cancellation_lhs_d3(fv, samples, n, rbox, h, gamma, wb, ct, st, caz, saz, waz, out):
    """Direct quadrature of the gain-loss difference at fixed v*.

    For each sampled v* node: sum over all v of |u|^gamma b [F(v')-F(v)],
    with F(v') read through quadratic interpolation (exact at nodes, so
    the bracket still vanishes in the theta -> 0 limit). Caller scales
    by h^d.
    """
    nn = n * n
    nt = wb.shape[0]
    nw = waz.shape[0]
    for a in range(samples.shape[0]):
        jj = samples[a]
        j0 = jj // nn
        j1 = (jj // n) % n
        j2 = jj % n
        wx = -rbox + (j0 + 0.5) * h
        wy = -rbox + (j1 + 0.5) * h
        wz = -rbox + (j2 + 0.5) * h
        acc_s = 0.0
        for i in range(n * n * n):
            if i == jj:
                continue
            i0 = i // nn
            i1 = (i // n) % n
            i2 = i % n
            vx = -rbox + (i0 + 0.5) * h
            vy = -rbox + (i1 + 0.5) * h
            vz = -rbox + (i2 + 0.5) * h
            fvi = fv[i0, i1, i2]
            ux = vx - wx
            uy = vy - wy
            uz = vz - wz
            r = np.sqrt(ux * ux + uy * uy + uz * uz)
            uhx = ux / r
            uhy = uy / r
            uhz = uz / r
            e1x, e1y, e1z, e2x, e2y, e2z = _frame3(uhx, uhy, uhz)
            rg = r**gamma
            mx = 0.5 * (vx + wx)
            my = 0.5 * (vy + wy)
            mz = 0.5 * (vz + wz)
            rh = 0.5 * r
            acc = 0.0
            for it in range(nt):
                c = ct[it]
                s = st[it]
                wtb = wb[it]
                for io in range(nw):
                    ox = caz[io] * e1x + saz[io] * e2x
                    oy = caz[io] * e1y + saz[io] * e2y
                    oz = caz[io] * e1z + saz[io] * e2z
                    sx = c * uhx + s * ox
                    sy = c * uhy + s * oy
                    sz = c * uhz + s * oz
                    fp = _interp3_quad(fv, n, rbox, h, mx + rh * sx, my + rh * sy, mz + rh * sz)
                    acc += wtb * waz[io] * (fp - fvi)
            acc_s += rg * acc
        out[a] = acc_s
    return out


@njit(cache=True)
def cancellation_lhs_d2(fv, samples, n, rbox, h, gamma, wb, ct, st, out):
    """Two-dimensional analogue of cancellation_lhs_d3."""
    nt = wb.shape[0]
    for a in range(samples.shape[0]):
        jj = samples[a]
        j0 = jj // n
        j1 = jj % n
        wx = -rbox + (j0 + 0.5) * h
        wy = -rbox + (j1 + 0.5) * h
        acc_s = 0.0
        for i in range(n * n):
            if i == jj:
                continue
            i0 = i // n
            i1 = i % n
            vx = -rbox + (i0 + 0.5) * h
            vy = -rbox + (i1 + 0.5) * h
            fvi = fv[i0, i1]
            ux = vx - wx
            uy = vy - wy
            r = np.sqrt(ux * ux + uy * uy)
            uhx = ux / r
            uhy = uy / r
            rg = r**gamma
            mx = 0.5 * (vx + wx)
            my = 0.5 * (vy + wy)
            rh = 0.5 * r
            acc = 0.0
            for it in range(nt):
                c = ct[it]
                s = st[it]
                wtb = wb[it]
                for sgn in range(2):
                    ss = s if sgn == 0 else -s
                    sx = c * uhx - ss * uhy
                    sy = c * uhy + ss * uhx
                    fp = _interp2_quad(fv, n, rbox, h, mx + rh * sx, my + rh * sy)
                    acc += wtb * (fp - fvi)
            acc_s += rg * acc
        out[a] = acc_s
    return out


@njit(cache=True)
def changevar_lhs_d3(psi, samples, sing, n, rbox, h, gamma, wb, ct, st, caz, saz, waz, out):
    """Left side of the post-collisional change-of-variable identities.

    sing=True: the sampled node is v and the sum runs over v*.
    sing=False: the sampled node is v* and the sum runs over v.
    Either way the integrand is |u|^gamma b(cos theta) psi(v') with
    v' = v - (u - |u| sigma)/2, psi read through quadratic
    interpolation. Caller scales by h^d.
    """
    nn = n * n
    nt = wb.shape[0]
    nw = waz.shape[0]
    for a in range(samples.shape[0]):
        ss_ = samples[a]
        s0 = ss_ // nn
        s1 = (ss_ // n) % n
        s2 = ss_ % n
        px = -rbox + (s0 + 0.5) * h
        py = -rbox + (s1 + 0.5) * h
        pz = -rbox + (s2 + 0.5) * h
        acc_s = 0.0
        for i in range(n * n * n):
            if i == ss_:
                continue
            i0 = i // nn
            i1 = (i // n) % n
            i2 = i % n
            qx = -rbox + (i0 + 0.5) * h
            qy = -rbox + (i1 + 0.5) * h
            qz = -rbox + (i2 + 0.5) * h
            if sing:
                ux = px - qx
                uy = py - qy
                uz = pz - qz
            else:
                ux = qx - px
                uy = qy - py
                uz = qz - pz
            mx = 0.5 * (px + qx)
            my = 0.5 * (py + qy)
            mz = 0.5 * (pz + qz)
            r = np.sqrt(ux * ux + uy * uy + uz * uz)
            uhx = ux / r
            uhy = uy / r
            uhz = uz / r
            e1x, e1y, e1z, e2x, e2y, e2z = _frame3(uhx, uhy, uhz)
            rg = r**gamma
            rh = 0.5 * r
            acc = 0.0
            for it in range(nt):
                c = ct[it]
                s = st[it]
                wtb = wb[it]
                for io in range(nw):
                    ox = caz[io] * e1x + saz[io] * e2x
                    oy = caz[io] * e1y + saz[io] * e2y
                    oz = caz[io] * e1z + saz[io] * e2z
                    sx = c * uhx + s * ox
                    sy = c * uhy + s * oy
                    sz = c * uhz + s * oz
                    acc += wtb * waz[io] * _interp3_quad(
                        psi, n, rbox, h, mx + rh * sx, my + rh * sy, mz + rh * sz
                    )
            acc_s += rg * acc
        out[a] = acc_s
    return out


@njit(cache=True)
def changevar_lhs_d2(psi, samples, sing, n, rbox, h, gamma, wb, ct, st, out):
    """Two-dimensional analogue of changevar_lhs_d3."""
    nt = wb.shape[0]
    for a in range(samples.shape[0]):
        ss_ = samples[a]
        s0 = ss_ // n
        s1 = ss_ % n
        px = -rbox + (s0 + 0.5) * h
        py = -rbox + (s1 + 0.5) * h
        acc_s = 0.0
        for i in range(n * n):
            if i == ss_:
                continue
            i0 = i // n
            i1 = i % n
            qx = -rbox + (i0 + 0.5) * h
            qy = -rbox + (i1 + 0.5) * h
            if sing:
                ux = px - qx
                uy = py - qy
            else:
                ux = qx - px
                uy = qy - py
            mx = 0.5 * (px + qx)
            my = 0.5 * (py + qy)
            r = np.sqrt(ux * ux + uy * uy)
            uhx = ux / r
            uhy = uy / r
            rg = r**gamma
            rh = 0.5 * r
            acc = 0.0
            for it in range(nt):
                c = ct[it]
                s = st[it]
                wtb = wb[it]
                for sgn in range(2):
                    ss2 = s if sgn == 0 else -s
                    sx = c * uhx - ss2 * uhy
                    sy = c * uhy + ss2 * uhx
                    acc += wtb * _interp2_quad(psi, n, rbox, h, mx + rh * sx, my + rh * sy)
            acc_s += rg * acc
        out[a] = acc_s
    return out


@njit(cache=True)
def weighted_pair_form_d3(g, f, field, iv, jv, n, rbox, h, gamma, aexp, cexp, prodthr,
                          wb, ct, st, caz, saz, waz, out):
    """Weighted trilinear sums: g(v) f(v*) |u|^gamma times the angular sum
    of b [<v'>^aexp - <v>^aexp] <v'>^cexp field(v').

    iv indexes the support of g (the v variable), jv the support of f.
    cexp = 0 skips the extra power. Caller scales by h^(2d) and reduces.
    """
    nn = n * n
    nt = wb.shape[0]
    nw = waz.shape[0]
    for a in range(iv.shape[0]):
        i = iv[a]
        i0 = i // nn
        i1 = (i // n) % n
        i2 = i % n
        vx = -rbox + (i0 + 0.5) * h
        vy = -rbox + (i1 + 0.5) * h
        vz = -rbox + (i2 + 0.5) * h
        gi = g[i0, i1, i2]
        if gi == 0.0:
            continue
        wv = (1.0 + vx * vx + vy * vy + vz * vz) ** (0.5 * aexp)
        for bidx in range(jv.shape[0]):
            j = jv[bidx]
            if j == i:
                continue
            j0 = j // nn
            j1 = (j // n) % n
            j2 = j % n
            prod = gi * f[j0, j1, j2]
            if prod == 0.0 or abs(prod) < prodthr:
                continue
            wx = -rbox + (j0 + 0.5) * h
            wy = -rbox + (j1 + 0.5) * h
            wz = -rbox + (j2 + 0.5) * h
            ux = vx - wx
            uy = vy - wy
            uz = vz - wz
            r = np.sqrt(ux * ux + uy * uy + uz * uz)
            coeff = prod * r**gamma
            uhx = ux / r
            uhy = uy / r
            uhz = uz / r
            e1x, e1y, e1z, e2x, e2y, e2z = _frame3(uhx, uhy, uhz)
            mx = 0.5 * (vx + wx)
            my = 0.5 * (vy + wy)
            mz = 0.5 * (vz + wz)
            rh = 0.5 * r
            acc = 0.0
            for it in range(nt):
                c = ct[it]
                s = st[it]
                wtb = wb[it]
                for io in range(nw):
                    ox = caz[io] * e1x + saz[io] * e2x
                    oy = caz[io] * e1y + saz[io] * e2y
                    oz = caz[io] * e1z + saz[io] * e2z
                    sx = c * uhx + s * ox
                    sy = c * uhy + s * oy
                    sz = c * uhz + s * oz
                    vpx = mx + rh * sx
                    vpy = my + rh * sy
                    vpz = mz + rh * sz
                    fieldp = _interp3_zero(field, n, rbox, h, vpx, vpy, vpz)
                    if fieldp == 0.0:
                        continue
                    wp2 = 1.0 + vpx * vpx + vpy * vpy + vpz * vpz
                    bracket = wp2 ** (0.5 * aexp) - wv
                    term = bracket * fieldp
                    if cexp != 0.0:
                        term *= wp2 ** (0.5 * cexp)
                    acc += wtb * waz[io] * term
            out[a] += coeff * acc
    return out


@njit(cache=True)
def weighted_pair_form_d2(g, f, field, iv, jv, n, rbox, h, gamma, aexp, cexp, prodthr,
                          wb, ct, st, out):
    """Two-dimensional analogue of weighted_pair_form_d3."""
    nt = wb.shape[0]
    for a in range(iv.shape[0]):
        i = iv[a]
        i0 = i // n
        i1 = i % n
        vx = -rbox + (i0 + 0.5) * h
        vy = -rbox + (i1 + 0.5) * h
        gi = g[i0, i1]
        if gi == 0.0:
            continue
        wv = (1.0 + vx * vx + vy * vy) ** (0.5 * aexp)
        for bidx in range(jv.shape[0]):
            j = jv[bidx]
            if j == i:
                continue
            j0 = j // n
            j1 = j % n
            prod = gi * f[j0, j1]
            if prod == 0.0 or abs(prod) < prodthr:
                continue
            wx = -rbox + (j0 + 0.5) * h
            wy = -rbox + (j1 + 0.5) * h
            ux = vx - wx
            uy = vy - wy
            r = np.sqrt(ux * ux + uy * uy)
            coeff = prod * r**gamma
            uhx = ux / r
            uhy = uy / r
            mx = 0.5 * (vx + wx)
            my = 0.5 * (vy + wy)
            rh = 0.5 * r
            acc = 0.0
            for it in range(nt):
                c = ct[it]
                s = st[it]
                wtb = wb[it]
                for sgn in range(2):
                    ss = s if sgn == 0 else -s
                    sx = c * uhx - ss * uhy
                    sy = c * uhy + ss * uhx
                    vpx = mx + rh * sx
                    vpy = my + rh * sy
                    fieldp = _interp2_zero(field, n, rbox, h, vpx, vpy)
                    if fieldp == 0.0:
                        continue
                    wp2 = 1.0 + vpx * vpx + vpy * vpy
                    bracket = wp2 ** (0.5 * aexp) - wv
                    term = bracket * fieldp
                    if cexp != 0.0:
                        term *= wp2 ** (0.5 * cexp)
                    acc += wtb * term
            out[a] += coeff * acc
    return out
