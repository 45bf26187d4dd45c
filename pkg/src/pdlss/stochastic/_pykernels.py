"""Pure-Python event loops.  ``_ckernels.pyx`` mirrors these line for line.

Both consume a pre-drawn array of uniforms two per event (holding time,
then event selection) and return control when the array is exhausted or
the horizon is reached, so the trace does not depend on batch size.

Event order for selection is by site: every site carries exactly one
active event (an exchange with the first opposite spin to its right, or a
flip when there is none), and flip-capable sites form the final run, so
ordering by site equals pairs-lexicographic-then-sites.
"""

from __future__ import annotations

import math

BACKEND = "python"


def _run_length(spins, n, sign):
    """Length of the maximal run of ``sign`` ending at 0-based index ``n - 1``."""
    k = 0
    i = n - 1
    while i >= 0 and spins[i] == sign:
        k += 1
        i -= 1
    return k


def _accumulate(spins, N, windows, mags, occ, eta_acc, kp_acc, km_acc, track_k, dt):
    for j in range(len(windows)):
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


def chain_advance(spins, lam_p, lam_m, t, t_end, burn_in, uniforms, pos,
                  windows, occ, eta_acc, kp_acc, km_acc, track_k, full_recompute):
    """Advance the spin chain in place.  Returns ``(t, pos, events, done)``."""
    out = spins
    spins = out.tolist()  # plain ints: int8 scalars would overflow in the sums below
    N = len(spins)
    J = windows.shape[0]
    mags = [0] * J
    for j in range(J):
        s = 0
        for i in range(windows[j]):
            s += spins[i]
        mags[j] = s
    n_plus = 0
    for i in range(N):
        if spins[i] == 1:
            n_plus += 1
    rates = [0.0] * N
    n_u = uniforms.shape[0]
    events = 0
    while True:
        if pos + 2 > n_u:
            out[:] = spins
            return t, pos, events, False
        if full_recompute:
            total = 0.0
            for i in range(N):
                rates[i] = lam_p if spins[i] == 1 else lam_m
                total += rates[i]
        else:
            total = n_plus * lam_p + (N - n_plus) * lam_m
        if not total > 0.0:
            raise RuntimeError("zero total rate")
        u1 = uniforms[pos]
        u2 = uniforms[pos + 1]
        pos += 2
        t_next = t - math.log1p(-u1) / total
        stop = t_next if t_next < t_end else t_end
        lo = t if t > burn_in else burn_in
        if stop > lo:
            _accumulate(spins, N, windows, mags, occ, eta_acc, kp_acc, km_acc, track_k, stop - lo)
        if t_next >= t_end:
            out[:] = spins
            return t_end, pos, events, True
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
                if x < windows[j] <= y:
                    mags[j] -= 2 * sx
        else:
            spins[x] = -sx
            n_plus -= sx
            for j in range(J):
                if x < windows[j]:
                    mags[j] -= 2 * sx
        events += 1


def particles_advance(X, lam_p, lam_m, t, t_end, burn_in, uniforms, pos, hist, cap):
    """Advance the particle system in place.

    ``hist`` is a flat occupation-time histogram indexed by the mixed-radix
    key ``sum_i (X_i - 1) * cap**i``; time spent with some ``X_i > cap`` is
    returned as overflow.  Returns ``(t, pos, events, done, overflow)``.
    """
    k = X.shape[0]
    n_u = uniforms.shape[0]
    events = 0
    overflow = 0.0
    right_total = k * lam_p
    while True:
        if pos + 2 > n_u:
            return t, pos, events, False, overflow
        total = right_total + lam_m * (X[k - 1] - k)
        u1 = uniforms[pos]
        u2 = uniforms[pos + 1]
        pos += 2
        t_next = t - math.log1p(-u1) / total
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
            return t_end, pos, events, True, overflow
        t = t_next

        target = u2 * total
        if target < right_total:
            i = int(target / lam_p)
            if i > k - 1:
                i = k - 1
            X[i] += 1
            while i + 1 < k and X[i + 1] == X[i]:
                X[i + 1] += 1
                i += 1
        else:
            e = int((target - right_total) / lam_m)
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
