"""Pure-Python rollout kernel.

Reference implementation of the closed-loop stride simulation.  The compiled
core (_core.pyx) mirrors this file operation-for-operation, in the same
order, so the two backends produce bit-identical results; keep them in sync.
"""

from __future__ import annotations

import math


def run_rollout(
    weights,  # float64[d], flat layout [W1, b1, W2, b2, W3, b3]
    n_in, h1, h2, n_out,
    turn_star, a_turn, a_stride,  # float64[n_out]
    g_tf, g_tl, g_sf, g_sl,  # float64[n_out], force gain per gait
    nominal_stride, turn_lo, turn_hi, stride_lo, stride_hi,
    init_heading,
    waypoints,  # float64[n_pts+1, 2]
    wp_spacing, speed, duration,
    k_x, k_y, n_x, n_y, sigma_f,
    noise,  # float64[K*S+1, 2], standard normal
    stride_duration, substeps, tube_radius, strides,
    scales,  # float64[6]
    want_trace,
    trace_t, trace_pr, trace_hr, trace_pl, trace_fe, trace_ft,
    selected,  # int64[strides]
):
    """Simulate `strides` strides; returns (prior_cost, tube_cost)."""
    cos = math.cos
    sin = math.sin
    exp = math.exp
    atan2 = math.atan2
    fmod = math.fmod
    pi = math.pi
    two_pi = 2.0 * math.pi

    w = weights.tolist()
    ts_arr = turn_star.tolist()
    at_arr = a_turn.tolist()
    as_arr = a_stride.tolist()
    gtf = g_tf.tolist()
    gtl = g_tl.tolist()
    gsf = g_sf.tolist()
    gsl = g_sl.tolist()
    wx = waypoints[:, 0].tolist()
    wy = waypoints[:, 1].tolist()
    nz_x = noise[:, 0].tolist()
    nz_y = noise[:, 1].tolist()
    sc = scales.tolist()

    n_seg = len(wx) - 1
    K = strides
    S = substeps
    dt = stride_duration / S
    half_dt = 0.5 * dt
    v_scale = speed / wp_spacing
    r2 = tube_radius * tube_radius
    inv_ts = 1.0 / stride_duration

    # weight layout offsets
    off_w1 = 0
    off_b1 = n_in * h1
    off_w2 = off_b1 + h1
    off_b2 = off_w2 + h1 * h2
    off_w3 = off_b2 + h2
    off_b3 = off_w3 + h2 * n_out

    z1 = [0.0] * h1
    z2 = [0.0] * h2

    # stride state (turn, stride) starts at the straight-walking fixed point
    x_turn = 0.0
    x_stride = nominal_stride
    pos_x = 0.0
    pos_y = 0.0
    heading = init_heading

    # observation: heading (wrapped), stride, heading rate, stride rate,
    # body-frame force integrals; stride 0 sees the equilibrium convention
    m0 = fmod(init_heading + pi, two_pi)
    if m0 <= 0.0:
        m0 += two_pi
    obs0 = m0 - pi
    obs1 = nominal_stride
    obs2 = 0.0
    obs3 = 0.0
    obs4 = 0.0
    obs5 = 0.0

    prior_acc = 0.0
    tube_count = 0
    last_node = K * S  # global index of the final substep node
    carry_ftx = 0.0
    carry_fty = 0.0
    carry_err = 0.0

    for k in range(K):
        # --- select a gait from the normalized observation -------------------
        y0 = obs0 / sc[0]
        y1 = obs1 / sc[1]
        y2 = obs2 / sc[2]
        y3 = obs3 / sc[3]
        y4 = obs4 / sc[4]
        y5 = obs5 / sc[5]
        for i in range(h1):
            acc = w[off_b1 + i]
            base = off_w1 + i * n_in
            acc += w[base] * y0
            acc += w[base + 1] * y1
            acc += w[base + 2] * y2
            acc += w[base + 3] * y3
            acc += w[base + 4] * y4
            acc += w[base + 5] * y5
            z1[i] = acc if acc >= 0.0 else exp(acc) - 1.0
        for i in range(h2):
            acc = w[off_b2 + i]
            base = off_w2 + i * h1
            for j in range(h1):
                acc += w[base + j] * z1[j]
            z2[i] = acc if acc >= 0.0 else exp(acc) - 1.0
        best = 0
        best_logit = 0.0
        for i in range(n_out):
            acc = w[off_b3 + i]
            base = off_w3 + i * h2
            for j in range(h2):
                acc += w[base + j] * z2[j]
            if i == 0 or acc > best_logit:
                best = i
                best_logit = acc
        r = best
        selected[k] = r

        # --- zero-force prediction of the executed motion --------------------
        turn_p = ts_arr[r] + at_arr[r] * (x_turn - ts_arr[r])
        stride_p = nominal_stride + as_arr[r] * (x_stride - nominal_stride)

        phi0 = heading
        c0 = cos(phi0)
        s0 = sin(phi0)
        imp_x = 0.0
        imp_y = 0.0

        if k > 0:
            # stride-boundary node: reuse the values computed by the previous
            # stride, re-resolved into this stride's body frame
            imp_x += half_dt * (c0 * carry_ftx + s0 * carry_fty)
            imp_y += half_dt * (-s0 * carry_ftx + c0 * carry_fty)
            prior_acc += half_dt * carry_err
            j_start = 1
        else:
            j_start = 0

        for j in range(j_start, S + 1):
            g = k * S + j
            t = g * dt
            u = j / S
            half_phi = phi0 + turn_p * (0.5 * u)
            ch = cos(half_phi)
            sh = sin(half_phi)
            arc = stride_p * u
            px = pos_x + arc * ch
            py = pos_y + arc * sh
            wobble = u * (0.5 * turn_p)
            vx = (stride_p * inv_ts) * (ch - wobble * sh)
            vy = (stride_p * inv_ts) * (sh + wobble * ch)

            # leader pose by interpolation on the dense polyline
            xq = t * v_scale
            if xq > n_seg:
                xq = float(n_seg)
            iq = int(xq)
            if iq > n_seg - 1:
                iq = n_seg - 1
            frac = xq - iq
            dx = wx[iq + 1] - wx[iq]
            dy = wy[iq + 1] - wy[iq]
            plx = wx[iq] + frac * dx
            ply = wy[iq] + frac * dy
            vlx = dx * v_scale
            vly = dy * v_scale
            phi_l = atan2(vly, vlx)

            fex = k_x * (plx - px) + n_x * (vlx - vx)
            fey = k_y * (ply - py) + n_y * (vly - vy)
            ftx = fex + sigma_f * nz_x[g]
            fty = fey + sigma_f * nz_y[g]

            wq = half_dt if (j == 0 or j == S) else dt
            imp_x += wq * (c0 * ftx + s0 * fty)
            imp_y += wq * (-s0 * ftx + c0 * fty)

            epx = plx - px
            epy = ply - py
            ep2 = epx * epx + epy * epy
            phi_r = phi0 + turn_p * u
            dc = cos(phi_l) - cos(phi_r)
            dsn = sin(phi_l) - sin(phi_r)
            err = ep2 + dc * dc + dsn * dsn
            prior_acc += (half_dt if (g == 0 or j == S) else dt) * err
            if g < last_node and ep2 >= r2:
                tube_count += 1

            if want_trace:
                trace_t[g] = t
                trace_pr[g, 0] = px
                trace_pr[g, 1] = py
                trace_hr[g] = phi_r
                trace_pl[g, 0] = plx
                trace_pl[g, 1] = ply
                trace_fe[g, 0] = fex
                trace_fe[g, 1] = fey
                trace_ft[g, 0] = ftx
                trace_ft[g, 1] = fty

            if j == S:
                carry_ftx = ftx
                carry_fty = fty
                carry_err = err

        # --- executed stride and pose update ---------------------------------
        turn_next = turn_p + gtf[r] * imp_x + gtl[r] * imp_y
        stride_next = stride_p + gsf[r] * imp_x + gsl[r] * imp_y
        if turn_next < turn_lo:
            turn_next = turn_lo
        elif turn_next > turn_hi:
            turn_next = turn_hi
        if stride_next < stride_lo:
            stride_next = stride_lo
        elif stride_next > stride_hi:
            stride_next = stride_hi

        mid = phi0 + 0.5 * turn_next
        pos_x += stride_next * cos(mid)
        pos_y += stride_next * sin(mid)
        heading = phi0 + turn_next

        m0 = fmod(heading + pi, two_pi)
        if m0 <= 0.0:
            m0 += two_pi
        obs0 = m0 - pi
        obs1 = stride_next
        obs2 = turn_next * inv_ts
        obs3 = (stride_next - x_stride) * inv_ts
        obs4 = imp_x
        obs5 = imp_y
        x_turn = turn_next
        x_stride = stride_next

    prior_cost = prior_acc / (speed * duration)
    tube_cost = tube_count / (K * S)
    return prior_cost, tube_cost
