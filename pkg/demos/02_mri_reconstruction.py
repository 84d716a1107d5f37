"""Accelerated Fourier-domain sampling (MRI-style)
=================================================

The measurement keeps a quarter of all k-space columns: a fully sampled band
around the zero-frequency column plus random lines.  The unsampled columns
span the kernel of the operator, which the data term cannot see at all; any
energy the iteration accumulates there is invisible to the fidelity but very
visible in the image.  Tracking the Fourier spectrum of the late-iteration
drift shows exactly that: changes after convergence live almost entirely in
the unsampled frequencies.
"""

import numpy as np

from eqpnp.denoisers import HaarSoftThresholdDenoiser
from eqpnp.grid import psnr
from eqpnp.io import make_phantom, save_image
from eqpnp.operators import MriOperator, make_mri_mask, simulate
from eqpnp.rng import SeededRng
from eqpnp.solvers import SolverConfig, pnp_fb

shape = (64, 64)
truth = make_phantom("shepp_like", *shape)

root = SeededRng(7)
mask = make_mri_mask(*shape, acceleration=4, center_fraction=0.08, rng=root.derive("mask"))
print(f"sampled columns: {int(mask[0].sum())} of {shape[1]} (x4 acceleration)")

A = MriOperator(mask)
y = simulate(A, truth, noise_std=0.0, rng=root.derive("noise"))  # noiseless protocol
print(f"zero-filled PSNR: {psnr(A.adjoint(y), truth):.2f} dB")

# wavelet soft-thresholding prior; snapshots of two iterates for the drift map
denoiser = HaarSoftThresholdDenoiser(levels=2, scale=1.0)
snapshots = {}
cfg = SolverConfig(
    gamma=1.0,
    sigma=0.002,
    max_iters=1000,
    seed=7,
    callback=lambda k, x: snapshots.__setitem__(k, x.copy()) if k in (100, 999) else None,
)
result = pnp_fb(A, y, denoiser, cfg, gt=truth)
print(f"reconstruction PSNR after 1000 iterations: {result.trace.psnr[-1]:.2f} dB")
save_image("mri_recon.img", result.x)

drift = np.fft.fft2(snapshots[999] - snapshots[100], norm="ortho")
inside = np.linalg.norm(drift[mask == 1.0])
outside = np.linalg.norm(drift[mask == 0.0])
print(
    f"late-iteration drift energy: sampled frequencies {inside:.2e}, "
    f"unsampled {outside:.2e} ({outside / max(inside, 1e-300):.0f}x more in the kernel)"
)
print("wrote mri_recon.img")
