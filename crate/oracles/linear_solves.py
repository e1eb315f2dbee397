"""Fixed points of affine maps x -> A x + c by dense linear solves."""
import numpy as np

from common import write_golden


def block_rotation(n, scale):
    t = np.zeros((n, n))
    for b in range(n // 2):
        t[2 * b, 2 * b + 1] = scale
        t[2 * b + 1, 2 * b] = -scale
    return t


if __name__ == "__main__":
    n = 10
    t = block_rotation(n, 5.0)
    c = 0.01 * np.arange(1, n + 1)
    block = np.linalg.solve(np.eye(n) - t, c)

    th = 0.7
    a = 0.9 * np.array([[np.cos(th), -np.sin(th)], [np.sin(th), np.cos(th)]])
    c2 = np.array([0.3, -0.2])
    contraction = np.linalg.solve(np.eye(2) - a, c2)

    write_golden(
        "linear_solves.json",
        "linear_solves.py",
        "numpy.linalg.solve on (I - A) x = c",
        {
            "block_rotation": {"n": n, "scale": 5.0, "c": c.tolist(), "fixed_point": block.tolist()},
            "rotation_contraction": {
                "factor": 0.9,
                "angle": th,
                "c": c2.tolist(),
                "fixed_point": contraction.tolist(),
            },
        },
    )
    print(block, contraction)
