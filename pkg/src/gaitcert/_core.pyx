# cython: language_level=3, boundscheck=False, wraparound=False, cdivision=True
"""Compiled rollout kernel.

Operation-for-operation transliteration of _core_py.run_rollout; the two
must stay in sync so results are bit-identical across backends (the build
disables FP contraction for this reason).
"""

from libc.math cimport atan2, cos, exp, fmod, sin
from libc.stdint cimport int64_t

cdef double PI = 3.141592653589793
cdef double TWO_PI = 6.283185307179586


def run_rollout(
    double[::1] weights,
    Py_ssize_t n_in, Py_ssize_t h1, Py_ssize_t h2, Py_ssize_t n_out,
    double[::1] turn_star, double[::1] a_turn, double[::1] a_stride,
    double[::1] g_tf, double[::1] g_tl, double[::1] g_sf, double[::1] g_sl,
    double nominal_stride, double turn_lo, double turn_hi,
    double stride_lo, double stride_hi,
    double init_heading,
    double[:, ::1] waypoints,
    double wp_spacing, double speed, double duration,
    double k_x, double k_y, double n_x, double n_y, double sigma_f,
    double[:, ::1] noise,
    double stride_duration, Py_ssize_t substeps, double tube_radius,
    Py_ssize_t strides,
    double[::1] scales,
    int want_trace,
    double[::1] trace_t, double[:, ::1] trace_pr, double[::1] trace_hr,
    double[:, ::1] trace_pl, double[:, ::1] trace_fe, double[:, ::1] trace_ft,
    int64_t[::1] selected,
):
    cdef Py_ssize_t n_seg = waypoints.shape[0] - 1
    cdef Py_ssize_t K = strides
    cdef Py_ssize_t S = substeps
    cdef double dt = stride_duration / S
    cdef double half_dt = 0.5 * dt
    cdef double v_scale = speed / wp_spacing
    cdef double r2 = tube_radius * tube_radius
    cdef double inv_ts = 1.0 / stride_duration

    cdef Py_ssize_t off_w1 = 0
    cdef Py_ssize_t off_b1 = n_in * h1
    cdef Py_ssize_t off_w2 = off_b1 + h1
    cdef Py_ssize_t off_b2 = off_w2 + h1 * h2
    cdef Py_ssize_t off_w3 = off_b2 + h2
    cdef Py_ssize_t off_b3 = off_w3 + h2 * n_out

    cdef double z1[64]
    cdef double z2[64]

    cdef double x_turn = 0.0
    cdef double x_stride = nominal_stride
    cdef double pos_x = 0.0
    cdef double pos_y = 0.0
    cdef double heading = init_heading

    cdef double m0 = fmod(init_heading + PI, TWO_PI)
    if m0 <= 0.0:
        m0 += TWO_PI
    cdef double obs0 = m0 - PI
    cdef double obs1 = nominal_stride
    cdef double obs2 = 0.0
    cdef double obs3 = 0.0
    cdef double obs4 = 0.0
    cdef double obs5 = 0.0

    cdef double prior_acc = 0.0
    cdef Py_ssize_t tube_count = 0
    cdef Py_ssize_t last_node = K * S
    cdef double carry_ftx = 0.0
    cdef double carry_fty = 0.0
    cdef double carry_err = 0.0

    cdef Py_ssize_t k, i, j, g, base, r, best, j_start, iq
    cdef double y0, y1, y2, y3, y4, y5, acc, best_logit
    cdef double turn_p, stride_p, phi0, c0, s0, imp_x, imp_y
    cdef double t, u, half_phi, ch, sh, arc, px, py, wobble, vx, vy
    cdef double xq, frac, dx, dy, plx, ply, vlx, vly, phi_l
    cdef double fex, fey, ftx, fty, wq, epx, epy, ep2, phi_r, dc, dsn, err
    cdef double turn_next, stride_next, mid
    cdef double prior_cost, tube_cost

    with nogil:
        for k in range(K):
            # --- select a gait from the normalized observation ----------------
            y0 = obs0 / scales[0]
            y1 = obs1 / scales[1]
            y2 = obs2 / scales[2]
            y3 = obs3 / scales[3]
            y4 = obs4 / scales[4]
            y5 = obs5 / scales[5]
            for i in range(h1):
                acc = weights[off_b1 + i]
                base = off_w1 + i * n_in
                acc += weights[base] * y0
                acc += weights[base + 1] * y1
                acc += weights[base + 2] * y2
                acc += weights[base + 3] * y3
                acc += weights[base + 4] * y4
                acc += weights[base + 5] * y5
                z1[i] = acc if acc >= 0.0 else exp(acc) - 1.0
            for i in range(h2):
                acc = weights[off_b2 + i]
                base = off_w2 + i * h1
                for j in range(h1):
                    acc += weights[base + j] * z1[j]
                z2[i] = acc if acc >= 0.0 else exp(acc) - 1.0
            best = 0
            best_logit = 0.0
            for i in range(n_out):
                acc = weights[off_b3 + i]
                base = off_w3 + i * h2
                for j in range(h2):
                    acc += weights[base + j] * z2[j]
                if i == 0 or acc > best_logit:
                    best = i
                    best_logit = acc
            r = best
            selected[k] = r

            # --- zero-force prediction of the executed motion -----------------
            turn_p = turn_star[r] + a_turn[r] * (x_turn - turn_star[r])
            stride_p = nominal_stride + a_stride[r] * (x_stride - nominal_stride)

            phi0 = heading
            c0 = cos(phi0)
            s0 = sin(phi0)
            imp_x = 0.0
            imp_y = 0.0

            if k > 0:
                # stride-boundary node: reuse the previous stride's values,
                # re-resolved into this stride's body frame
                imp_x += half_dt * (c0 * carry_ftx + s0 * carry_fty)
                imp_y += half_dt * (-s0 * carry_ftx + c0 * carry_fty)
                prior_acc += half_dt * carry_err
                j_start = 1
            else:
                j_start = 0

            for j in range(j_start, S + 1):
                g = k * S + j
                t = g * dt
                u = (<double> j) / (<double> S)
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
                    xq = <double> n_seg
                iq = <Py_ssize_t> xq
                if iq > n_seg - 1:
                    iq = n_seg - 1
                frac = xq - iq
                dx = waypoints[iq + 1, 0] - waypoints[iq, 0]
                dy = waypoints[iq + 1, 1] - waypoints[iq, 1]
                plx = waypoints[iq, 0] + frac * dx
                ply = waypoints[iq, 1] + frac * dy
                vlx = dx * v_scale
                vly = dy * v_scale
                phi_l = atan2(vly, vlx)

                fex = k_x * (plx - px) + n_x * (vlx - vx)
                fey = k_y * (ply - py) + n_y * (vly - vy)
                ftx = fex + sigma_f * noise[g, 0]
                fty = fey + sigma_f * noise[g, 1]

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

            # --- executed stride and pose update ------------------------------
            turn_next = turn_p + g_tf[r] * imp_x + g_tl[r] * imp_y
            stride_next = stride_p + g_sf[r] * imp_x + g_sl[r] * imp_y
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

            m0 = fmod(heading + PI, TWO_PI)
            if m0 <= 0.0:
                m0 += TWO_PI
            obs0 = m0 - PI
            obs1 = stride_next
            obs2 = turn_next * inv_ts
            obs3 = (stride_next - x_stride) * inv_ts
            obs4 = imp_x
            obs5 = imp_y
            x_turn = turn_next
            x_stride = stride_next

    prior_cost = prior_acc / (speed * duration)
    tube_cost = (<double> tube_count) / (<double> (K * S))
    return prior_cost, tube_cost
