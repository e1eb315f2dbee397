"""Fixed point of F = H o G on the cylinder, by brute force in the chart.

G(x,y,z) = (x,-y,-z) acts as (phi, w) -> (-phi, -w).
H(phi, w) = (phi + 0.05 cos phi, w + 0.1 + 0.05 sin phi).
A fixed point solves r(phi, w) = 0 with r the chart displacement of F,
angles compared modulo 2 pi. Coarse grid of |r| over the chart square
|phi|, |w| <= pi/2, then bisection-free refinement by nested grids.
"""
import numpy as np
from mpmath import mp, mpf, cos, sin, findroot

from common import write_golden


def F(phi, w):
    p, q = -phi, -w
    return p + 0.05 * np.cos(p), q + 0.1 + 0.05 * np.sin(p)


def residual(phi, w):
    fp, fw = F(phi, w)
    dphi = (fp - phi + np.pi) % (2 * np.pi) - np.pi
    return np.hypot(dphi, fw - w)


def brute_force():
    c = np.array([0.0, 0.0])
    half = np.pi / 2
    for _ in range(12):
        g = np.linspace(-half, half, 801)
        P, W = np.meshgrid(c[0] + g, c[1] + g, indexing="ij")
        R = residual(P, W)
        i, j = np.unravel_index(np.argmin(R), R.shape)
        c = np.array([P[i, j], W[i, j]])
        half = 4 * (g[1] - g[0])
    return c


def high_precision(start):
    mp.dps = 40
    # -2 phi + 0.05 cos(phi) = 0, -2 w + 0.1 - 0.05 sin(phi) = 0
    phi = findroot(lambda t: -2 * t + mpf("0.05") * cos(t), mpf(start[0]))
    w = (mpf("0.1") - mpf("0.05") * sin(phi)) / 2
    return float(phi), float(w)


if __name__ == "__main__":
    bf = brute_force()
    phi, w = high_precision(bf)
    assert abs(bf[0] - phi) < 1e-9 and abs(bf[1] - w) < 1e-9, (bf, phi, w)
    write_golden(
        "cylinder_fixed_point.json",
        "cylinder_fixed_point.py",
        "nested 801x801 chart grids minimizing |F(x)-x| (numpy), confirmed by a 40-digit root solve (mpmath)",
        {
            "h_of_g": {
                "chart": [phi, w],
                "point": [float(np.cos(phi)), float(np.sin(phi)), w],
                "brute_force_chart": [float(bf[0]), float(bf[1])],
            }
        },
    )
    print("fixed point chart", phi, w)
