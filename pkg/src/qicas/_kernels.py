"""Hot loops over determinant strings and Jacobi angle grids.

Each ``*_loop`` function is compiled by numba when available (see
``_accel``); the ``*_numpy`` twins are vectorised fallbacks used when the
JIT is disabled. Public wrappers at the bottom pick one of the two.

String conventions: a spin string is an integer bitmask over spatial
orbitals. Excitation tables list, for every string ``I`` and slot ``x``,
the compound index ``pq = p * d + q``, the target string index ``J`` and
the sign with ``a+_p a_q |I> = sign |J>`` (``p == q`` included).
"""

import numpy as np

from ._accel import USE_NUMBA, jit


# ------------------------------------------------------------ strings

@jit
def _popcount(x):
    n = 0
    while x:
        x &= x - 1
        n += 1
    return n


@jit
def excitation_loop(strings, index_of, d):
    n_str = strings.shape[0]
    n_el = _popcount(strings[0]) if n_str else 0
    n_exc = n_el * (d - n_el) + n_el
    ex_pq = np.zeros((n_str, n_exc), dtype=np.int64)
    ex_j = np.zeros((n_str, n_exc), dtype=np.int64)
    ex_s = np.zeros((n_str, n_exc), dtype=np.float64)
    for a in range(n_str):
        s = strings[a]
        x = 0
        for q in range(d):
            if not (s >> q) & 1:
                continue
            sign_q = 1.0 - 2.0 * (_popcount(s & ((1 << q) - 1)) & 1)
            t = s ^ (1 << q)
            for p in range(d):
                if (t >> p) & 1:
                    continue
                sign_p = 1.0 - 2.0 * (_popcount(t & ((1 << p) - 1)) & 1)
                ex_pq[a, x] = p * d + q
                ex_j[a, x] = index_of[t | (1 << p)]
                ex_s[a, x] = sign_q * sign_p
                x += 1
    return ex_pq, ex_j, ex_s


# ------------------------------------------------------------ sigma vector

@jit
def sigma_loop(c, e_core, k1, eri2, d, exa_pq, exa_j, exa_s, exb_pq, exb_j, exb_s):
    na, nb = c.shape
    nxa = exa_pq.shape[1]
    nxb = exb_pq.shape[1]
    out = e_core * c
    # same-spin alpha: one-body and (1/2) E_pq E_rs
    for ia in range(na):
        for x in range(nxa):
            rs = exa_pq[ia, x]
            ka = exa_j[ia, x]
            s1 = exa_s[ia, x]
            f = k1[rs // d, rs % d] * s1
            if f != 0.0:
                for ib in range(nb):
                    out[ka, ib] += f * c[ia, ib]
            for y in range(nxa):
                f2 = 0.5 * eri2[exa_pq[ka, y], rs] * s1 * exa_s[ka, y]
                if f2 != 0.0:
                    ja = exa_j[ka, y]
                    for ib in range(nb):
                        out[ja, ib] += f2 * c[ia, ib]
    # same-spin beta
    for ib in range(nb):
        for x in range(nxb):
            rs = exb_pq[ib, x]
            kb = exb_j[ib, x]
            s1 = exb_s[ib, x]
            f = k1[rs // d, rs % d] * s1
            if f != 0.0:
                for ia in range(na):
                    out[ia, kb] += f * c[ia, ib]
            for y in range(nxb):
                f2 = 0.5 * eri2[exb_pq[kb, y], rs] * s1 * exb_s[kb, y]
                if f2 != 0.0:
                    jb = exb_j[kb, y]
                    for ia in range(na):
                        out[ia, jb] += f2 * c[ia, ib]
    # opposite spin: sum (pq|rs) E^a_pq E^b_rs
    for ia in range(na):
        for x in range(nxa):
            pq = exa_pq[ia, x]
            ja = exa_j[ia, x]
            s1 = exa_s[ia, x]
            for ib in range(nb):
                cv = s1 * c[ia, ib]
                if cv == 0.0:
                    continue
                for y in range(nxb):
                    f = eri2[pq, exb_pq[ib, y]]
                    if f != 0.0:
                        out[ja, exb_j[ib, y]] += f * exb_s[ib, y] * cv
    return out


def _apply_e_alpha(c, ex_pq, ex_j, ex_s, d):
    """All one-body replacements on the alpha index: ``out[pq] = E^a_pq C``."""
    na, nb = c.shape
    out = np.zeros((d * d, na, nb))
    rows = np.repeat(np.arange(na), ex_pq.shape[1])
    np.add.at(out, (ex_pq.ravel(), ex_j.ravel()), ex_s.ravel()[:, None] * c[rows])
    return out


def _apply_e_beta(c, ex_pq, ex_j, ex_s, d):
    return _apply_e_alpha(c.T, ex_pq, ex_j, ex_s, d).transpose(0, 2, 1)


def sigma_numpy(c, e_core, k1, eri2, d, exa_pq, exa_j, exa_s, exb_pq, exb_j, exb_s):
    dc = _apply_e_alpha(c, exa_pq, exa_j, exa_s, d) + _apply_e_beta(c, exb_pq, exb_j, exb_s, d)
    out = e_core * c + np.tensordot(k1.ravel(), dc, axes=(0, 0))
    g = 0.5 * np.tensordot(eri2, dc, axes=(1, 0))
    # contract E_pq against g[pq] on each spin index
    na, nb = c.shape
    rows = np.repeat(np.arange(na), exa_pq.shape[1])
    np.add.at(out, exa_j.ravel(), exa_s.ravel()[:, None] * g[exa_pq.ravel(), rows])
    cols = np.repeat(np.arange(nb), exb_pq.shape[1])
    gt = g.transpose(0, 2, 1)
    outt = np.zeros((nb, na))
    np.add.at(outt, exb_j.ravel(), exb_s.ravel()[:, None] * gt[exb_pq.ravel(), cols])
    return out + outt.T


# ------------------------------------------------------------ RDMs

@jit
def rdm1_loop(c, ex_pq, ex_j, ex_s, d):
    """gamma[p, q] = <a+_p a_q> along the row (alpha) index of ``c``."""
    n_str, nb = c.shape
    gamma = np.zeros((d, d))
    for a in range(n_str):
        for x in range(ex_pq.shape[1]):
            j = ex_j[a, x]
            acc = 0.0
            for b in range(nb):
                acc += c[j, b] * c[a, b]
            gamma[ex_pq[a, x] // d, ex_pq[a, x] % d] += ex_s[a, x] * acc
    return gamma


def rdm1_numpy(c, ex_pq, ex_j, ex_s, d):
    overlap = np.einsum("xb,xb->x", c[ex_j.ravel()],
                        np.repeat(c, ex_pq.shape[1], axis=0))
    gamma = np.zeros(d * d)
    np.add.at(gamma, ex_pq.ravel(), ex_s.ravel() * overlap)
    return gamma.reshape(d, d)


@jit
def rdm_os_loop(c, exa_pq, exa_j, exa_s, exb_pq, exb_j, exb_s, d):
    """G[pr, qs] = <E^a_pr E^b_qs>, i.e. <a+_pA a+_qB a_sB a_rA>."""
    na, nb = c.shape
    g = np.zeros((d * d, d * d))
    for ia in range(na):
        for x in range(exa_pq.shape[1]):
            pr = exa_pq[ia, x]
            ja = exa_j[ia, x]
            s1 = exa_s[ia, x]
            for ib in range(nb):
                cv = s1 * c[ia, ib]
                if cv == 0.0:
                    continue
                for y in range(exb_pq.shape[1]):
                    g[pr, exb_pq[ib, y]] += exb_s[ib, y] * cv * c[ja, exb_j[ib, y]]
    return g


def rdm_os_numpy(c, exa_pq, exa_j, exa_s, exb_pq, exb_j, exb_s, d):
    # <E^a_pr E^b_qs> = <E^a_rp C | E^b_qs C>
    da = _apply_e_alpha(c, exa_pq, exa_j, exa_s, d).reshape(d * d, -1)
    db = _apply_e_beta(c, exb_pq, exb_j, exb_s, d).reshape(d * d, -1)
    g = da @ db.T                                   # [rp, qs]
    return g.reshape(d, d, d * d).transpose(1, 0, 2).reshape(d * d, d * d)


# ------------------------------------------------------------ angle scans

@jit
def _entropy4(l0, l1, l2, l3):
    s = 0.0
    for lam in (l0, l1, l2, l3):
        if lam > 0.0:
            s -= lam * np.log(lam)
    return s


@jit
def pair_scan_loop(thetas, ga, gb, g16, include_i, include_j):
    """Sum of the rotated pair's entropies, restricted to included orbitals.

    ``ga``/``gb`` are the 2x2 spin blocks on (i, j) and ``g16`` the 2x2x2x2
    opposite-spin block; rotated orbital i is ``c phi_i + s phi_j`` and j is
    ``-s phi_i + c phi_j``.
    """
    out = np.empty(thetas.shape[0])
    v = np.empty(2)
    for t in range(thetas.shape[0]):
        c = np.cos(thetas[t])
        s = np.sin(thetas[t])
        total = 0.0
        for which in range(2):
            if which == 0:
                if not include_i:
                    continue
                v[0] = c
                v[1] = s
            else:
                if not include_j:
                    continue
                v[0] = -s
                v[1] = c
            na = 0.0
            nb = 0.0
            for p in range(2):
                for q in range(2):
                    w = v[p] * v[q]
                    na += w * ga[p, q]
                    nb += w * gb[p, q]
            dbl = 0.0
            for p in range(2):
                for q in range(2):
                    for r in range(2):
                        for u in range(2):
                            dbl += v[p] * v[q] * v[r] * v[u] * g16[p, q, r, u]
            l0 = 1.0 - na - nb + dbl
            l1 = na - dbl
            l2 = nb - dbl
            total += _entropy4(l0 if l0 > 0.0 else 0.0, l1 if l1 > 0.0 else 0.0,
                               l2 if l2 > 0.0 else 0.0, dbl if dbl > 0.0 else 0.0)
        out[t] = total
    return out


def _xlogx(x):
    x = np.clip(x, 0.0, None)
    with np.errstate(divide="ignore", invalid="ignore"):
        return np.where(x > 0.0, -x * np.log(np.where(x > 0.0, x, 1.0)), 0.0)


def pair_scan_numpy(thetas, ga, gb, g16, include_i, include_j):
    c, s = np.cos(thetas), np.sin(thetas)
    total = np.zeros_like(thetas)
    for flag, v in ((include_i, np.stack([c, s], 1)), (include_j, np.stack([-s, c], 1))):
        if not flag:
            continue
        na = np.einsum("tp,pq,tq->t", v, ga, v)
        nb = np.einsum("tp,pq,tq->t", v, gb, v)
        dbl = np.einsum("tp,tq,tr,tu,pqru->t", v, v, v, v, g16)
        total += (_xlogx(1.0 - na - nb + dbl) + _xlogx(na - dbl)
                  + _xlogx(nb - dbl) + _xlogx(dbl))
    return total


# ------------------------------------------------------------ dispatch

def sigma(*args):
    return (sigma_loop if USE_NUMBA else sigma_numpy)(*args)


def rdm1(*args):
    return (rdm1_loop if USE_NUMBA else rdm1_numpy)(*args)


def rdm_os(*args):
    return (rdm_os_loop if USE_NUMBA else rdm_os_numpy)(*args)


def pair_scan(thetas, ga, gb, g16, include_i, include_j):
    fn = pair_scan_loop if USE_NUMBA else pair_scan_numpy
    return fn(np.ascontiguousarray(thetas, dtype=float), np.ascontiguousarray(ga),
              np.ascontiguousarray(gb), np.ascontiguousarray(g16),
              bool(include_i), bool(include_j))
