"""Cylinder geodesic distances from the flat unrolling, on seeded pairs."""
import numpy as np

from common import write_golden

if __name__ == "__main__":
    rng = np.random.default_rng(20)
    pairs = []
    for _ in range(200):
        t1, t2 = rng.uniform(-np.pi, np.pi, 2)
        z1, z2 = rng.uniform(-3, 3, 2)
        dt = min(abs(t1 - t2), 2 * np.pi - abs(t1 - t2))
        pairs.append(
            {
                "p": [np.cos(t1), np.sin(t1), z1],
                "q": [np.cos(t2), np.sin(t2), z2],
                "distance": float(np.hypot(dt, z1 - z2)),
            }
        )
    write_golden(
        "cylinder_distance.json",
        "cylinder_distance.py",
        "sqrt(min(|dtheta|, 2pi-|dtheta|)^2 + dz^2) on 200 seeded pairs (numpy default_rng(20))",
        {"pairs": pairs},
    )
