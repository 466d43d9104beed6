"""Hot recurrence kernels, written once in numpy.

These are the only functions in the package whose runtime matters: the GRU
recurrences are inherently sequential over time steps and sit inside every
sentence encoded during training. ``crossrumor.backend`` either JIT-compiles
them with numba or calls them as-is (pure numpy fallback), so everything here
must stay inside numba's nopython subset: numpy arrays, slices, ``@`` on
contiguous operands, ufuncs, ``np.outer``.

Gate layout is packed as [update | reset | candidate] along the last axis.
The step function is the interpolation form

    z_t = sigmoid(x_t W_z + h_{t-1} U_z + b_z)
    r_t = sigmoid(x_t W_r + h_{t-1} U_r + b_r)
    c_t = tanh   (x_t W_c + (r_t * h_{t-1}) U_c + b_c)
    h_t = z_t * h_{t-1} + (1 - z_t) * c_t

The input projections ``x_t W + b`` for all steps are one dense matmul and
are precomputed by the caller (``xw`` below); the kernels only run the part
that cannot be batched.
"""

import numpy as np


def gru_layer_forward(xw, u_zr, u_c, h0):
    """Run the recurrence over a whole sequence.

    xw:   (T, 3H) input projections plus bias, gates packed [z | r | c]
    u_zr: (H, 2H) recurrent weights for the update and reset gates
    u_c:  (H, H)  recurrent weights for the candidate
    h0:   (H,)    initial hidden state

    Returns ``(h_all, z_seq, r_seq, c_seq)`` where ``h_all`` is (T+1, H) with
    ``h_all[0] == h0``, and the gate activations are each (T, H). All four are
    needed again by :func:`gru_layer_backward`.
    """
    T = xw.shape[0]
    H = h0.shape[0]
    h_all = np.empty((T + 1, H))
    z_seq = np.empty((T, H))
    r_seq = np.empty((T, H))
    c_seq = np.empty((T, H))
    h_all[0] = h0
    for t in range(T):
        h_prev = h_all[t]
        hu = h_prev @ u_zr
        z = 1.0 / (1.0 + np.exp(-(xw[t, :H] + hu[:H])))
        r = 1.0 / (1.0 + np.exp(-(xw[t, H : 2 * H] + hu[H:])))
        c = np.tanh(xw[t, 2 * H :] + (r * h_prev) @ u_c)
        h_all[t + 1] = z * h_prev + (1.0 - z) * c
        z_seq[t] = z
        r_seq[t] = r
        c_seq[t] = c
    return h_all, z_seq, r_seq, c_seq


def gru_layer_backward(dh_seq, h_all, z_seq, r_seq, c_seq, u_zr, u_c):
    """Backpropagation through time for :func:`gru_layer_forward`.

    dh_seq: (T, H) gradient flowing into each step's hidden output (the sum
            of whatever consumers read h_t directly; the recurrent path is
            handled here).

    Returns ``(dxw, du_zr, du_c, dh0)``. ``dxw`` is the gradient on the
    packed input projections; the caller turns it into weight/bias/input
    gradients with dense matmuls.
    """
    T, H = dh_seq.shape
    dxw = np.empty((T, 3 * H))
    du_z = np.zeros((H, H))
    du_r = np.zeros((H, H))
    du_c = np.zeros((H, H))
    dh = np.zeros(H)
    for t in range(T - 1, -1, -1):
        dh = dh + dh_seq[t]
        h_prev = h_all[t]
        z = z_seq[t]
        r = r_seq[t]
        c = c_seq[t]
        dz = dh * (h_prev - c)
        dc = dh * (1.0 - z)
        da_c = dc * (1.0 - c * c)
        drh = da_c @ u_c.T  # gradient w.r.t. (r * h_prev)
        dr = drh * h_prev
        da_z = dz * z * (1.0 - z)
        da_r = dr * r * (1.0 - r)
        dxw[t, :H] = da_z
        dxw[t, H : 2 * H] = da_r
        dxw[t, 2 * H :] = da_c
        du_z += np.outer(h_prev, da_z)
        du_r += np.outer(h_prev, da_r)
        du_c += np.outer(r * h_prev, da_c)
        da_zr = np.empty(2 * H)
        da_zr[:H] = da_z
        da_zr[H:] = da_r
        dh = dh * z + drh * r + da_zr @ u_zr.T
    du_zr = np.empty((H, 2 * H))
    du_zr[:, :H] = du_z
    du_zr[:, H:] = du_r
    return dxw, du_zr, du_c, dh


KERNEL_NAMES = ("gru_layer_forward", "gru_layer_backward")
