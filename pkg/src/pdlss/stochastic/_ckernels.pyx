# cython: language_level=3, boundscheck=False, wraparound=False, cdivision=True
"""Compiled event loops; see ``_pykernels`` for the reference semantics."""

from libc.math cimport log1p

BACKEND = "cython"


cdef inline long _run_length(signed char[::1] spins, long n, signed char sign) noexcept nogil:
    cdef long k = 0
    cdef long i = n - 1
    while i >= 0 and spins[i] == sign:
        k += 1
        i -= 1
    return k


cdef void _accumulate(signed char[::1] spins, long N, long[::1] windows, long[::1] mags,
                      double[:, ::1] occ, double[:, ::1] eta_acc, double[:, ::1] kp_acc,
                      double[:, ::1] km_acc, bint track_k, double dt) noexcept nogil:
    cdef long j, n, idx
    for j in range(windows.shape[0]):
        n = windows[j]
        idx = (mags[j] + n) // 2
        occ[j, idx] += dt
        if n < N:
            eta_acc[j, idx] += spins[n] * dt
        if track_k:
            if spins[n - 1] == 1:
                kp_acc[j, idx] += _run_length(spins, n, 1) * dt
            else:
                km_acc[j, idx] += _run_length(spins, n, -1) * dt


def chain_advance(signed char[::1] spins, double lam_p, double lam_m, double t, double t_end,
                  double burn_in, double[::1] uniforms, long pos, long[::1] windows,
                  double[:, ::1] occ, double[:, ::1] eta_acc, double[:, ::1] kp_acc,
                  double[:, ::1] km_acc, bint track_k, bint full_recompute):
    cdef long N = spins.shape[0]
    cdef long J = windows.shape[0]
    cdef long n_u = uniforms.shape[0]
    cdef long i, j, x, y, z, n_plus = 0, events = 0
    cdef double total, u1, u2, t_next, stop, lo, target, acc
    cdef signed char sx
    cdef long[::1] mags
    cdef double[::1] rates
    import numpy as np
    mags = np.zeros(J, dtype=np.int_)
    rates = np.zeros(N, dtype=np.float64)
    for j in range(J):
        for i in range(windows[j]):
            mags[j] += spins[i]
    for i in range(N):
        if spins[i] == 1:
            n_plus += 1
    with nogil:
        while True:
            if pos + 2 > n_u:
                break
            if full_recompute:
                total = 0.0
                for i in range(N):
                    rates[i] = lam_p if spins[i] == 1 else lam_m
                    total += rates[i]
            else:
                total = n_plus * lam_p + (N - n_plus) * lam_m
            u1 = uniforms[pos]
            u2 = uniforms[pos + 1]
            pos += 2
            t_next = t - log1p(-u1) / total
            stop = t_next if t_next < t_end else t_end
            lo = t if t > burn_in else burn_in
            if stop > lo:
                _accumulate(spins, N, windows, mags, occ, eta_acc, kp_acc, km_acc, track_k, stop - lo)
            if t_next >= t_end:
                t = t_end
                with gil:
                    return t, pos, events, True
            t = t_next

            target = u2 * total
            acc = 0.0
            x = N - 1
            if full_recompute:
                for i in range(N):
                    acc += rates[i]
                    if target < acc:
                        x = i
                        break
            else:
                for i in range(N):
                    acc += lam_p if spins[i] == 1 else lam_m
                    if target < acc:
                        x = i
                        break

            sx = spins[x]
            y = -1
            for z in range(x + 1, N):
                if spins[z] != sx:
                    y = z
                    break
            if y >= 0:
                spins[x] = -sx
                spins[y] = sx
                for j in range(J):
                    if x < windows[j] and windows[j] <= y:
                        mags[j] -= 2 * sx
            else:
                spins[x] = -sx
                n_plus -= sx
                for j in range(J):
                    if x < windows[j]:
                        mags[j] -= 2 * sx
            events += 1
    return t, pos, events, False


def particles_advance(long[::1] X, double lam_p, double lam_m, double t, double t_end,
                      double burn_in, double[::1] uniforms, long pos, double[::1] hist, long cap):
    cdef long k = X.shape[0]
    cdef long n_u = uniforms.shape[0]
    cdef long i, e, n_empty, prev, gap, key, radix, events = 0
    cdef double overflow = 0.0, right_total = k * lam_p
    cdef double total, u1, u2, t_next, stop, lo, target
    cdef bint inside
    with nogil:
        while True:
            if pos + 2 > n_u:
                break
            total = right_total + lam_m * (X[k - 1] - k)
            u1 = uniforms[pos]
            u2 = uniforms[pos + 1]
            pos += 2
            t_next = t - log1p(-u1) / total
            stop = t_next if t_next < t_end else t_end
            lo = t if t > burn_in else burn_in
            if stop > lo:
                key = 0
                radix = 1
                inside = True
                for i in range(k):
                    if X[i] > cap:
                        inside = False
                        break
                    key += (X[i] - 1) * radix
                    radix *= cap
                if inside:
                    hist[key] += stop - lo
                else:
                    overflow += stop - lo
            if t_next >= t_end:
                t = t_end
                with gil:
                    return t, pos, events, True, overflow
            t = t_next

            target = u2 * total
            if target < right_total:
                i = <long>(target / lam_p)
                if i > k - 1:
                    i = k - 1
                X[i] += 1
                while i + 1 < k and X[i + 1] == X[i]:
                    X[i + 1] += 1
                    i += 1
            else:
                e = <long>((target - right_total) / lam_m)
                n_empty = X[k - 1] - k
                if e > n_empty - 1:
                    e = n_empty - 1
                prev = 0
                for i in range(k):
                    gap = X[i] - prev - 1
                    if e < gap:
                        X[i] = prev + 1 + e
                        break
                    e -= gap
                    prev = X[i]
            events += 1
    return t, pos, events, False, overflow
