"""Regenerates the bundled fixture configs.

Every fixture places its solution p by construction: each operator is
A_i(x) = M_i (x - p) - mu_i * nu with nu in the normal cone of C at p
(nu = 0 when p is interior). Then p - lam * A_i(p) = p + lam * mu_i * nu
projects back to p, so every stage of G fixes p.

    python3 generate.py
"""

import json
import math
from pathlib import Path

import numpy as np

HERE = Path(__file__).resolve().parent
K_SQUARED = 0.5


def certify(m, c):
    lip = np.linalg.svd(m, compute_uv=False).max()
    d = np.linalg.eigvalsh(0.5 * (m + m.T) + c * m.T @ m).min()
    assert d > c * lip**2, (d, c, lip)
    return d, lip


def window(m, c):
    d, lip = certify(m, c)
    return (d - c * lip**2) / (K_SQUARED * lip**2)


def factor(m, c, lam):
    d, lip = certify(m, c)
    return math.sqrt(max(0.0, 1 + 2 * (lam * c * lip**2 - lam * d + K_SQUARED * lam**2 * lip**2)))


def random_matrix(dim, rng):
    while True:
        m = np.diag(rng.uniform(1.0, 3.0, dim)) + 0.4 / math.sqrt(dim) * rng.uniform(-1, 1, (dim, dim))
        c = float(rng.uniform(0.01, 0.05))
        try:
            certify(m, c)
            return m, c
        except AssertionError:
            continue


def vec(v):
    return [float(x) for x in v]


def build(name, *, dim, set_, p, nu, mats, cs, mus, thetas, contraction, nonexpansive,
          schedule_a, schedule_b, x1, lambdas=None, overrides=None, tol=1e-8, max_iter=100000):
    p = np.asarray(p, float)
    nu = np.zeros(dim) if nu is None else np.asarray(nu, float)
    operators = []
    lams = []
    factors = []
    for i, (m, c, mu) in enumerate(zip(mats, cs, mus)):
        m = np.asarray(m, float)
        shift = -m @ p - mu * nu
        op = {"matrix": vec(m.reshape(-1)), "shift": vec(shift), "c": c}
        if overrides and overrides[i]:
            op.update(overrides[i])
        operators.append(op)
        lam = lambdas[i] if lambdas else thetas[i] * window(m, c)
        lams.append(float(lam))
        factors.append(factor(m, c, lam) if not (overrides and overrides[i]) else float("nan"))
    config = {
        "dimension": dim,
        "problem": {
            "set": set_,
            "operators": operators,
            "lambdas": lams,
            "contraction": contraction,
            "nonexpansive": nonexpansive,
            "schedule_a": schedule_a,
            "schedule_b": schedule_b,
        },
        "x1": vec(x1),
        "tol": tol,
        "max_iter": max_iter,
        "seed": 0,
        "reference_p": vec(p),
    }
    r = float(np.prod(factors))
    m3 = np.asarray(mats[2], float)
    d3, l3 = certify(m3, cs[2])
    alpha3 = d3 - cs[2] * l3**2
    print(f"{name}: r = {r:.4f}, L3 / (alpha3 (1 - r)) = {l3 / (alpha3 * (1 - r)):.3f}")
    (HERE / f"{name}.json").write_text(json.dumps(config, indent=2) + "\n")
    return config


def toward(anchor, alpha):
    return {"type": "toward", "anchor": vec(anchor), "alpha": alpha}


def harmonic(shift):
    return {"type": "harmonic", "shift": shift}


def constant(value):
    return {"type": "constant", "value": value}


def box(lo, hi):
    return {"type": "box", "lower": vec(lo), "upper": vec(hi)}


def ball(center, radius):
    return {"type": "ball", "center": vec(center), "radius": radius}


def halfspace(normal, offset):
    return {"type": "halfspace", "normal": vec(normal), "offset": offset}


def main():
    one = [[1.0]]
    identity_ops = dict(mats=[one] * 3, cs=[0.1] * 3, mus=[0, 0, 0], thetas=None,
                        lambdas=[0.5] * 3, overrides=[{"d": 1.0}] * 3)
    build("01_scalar_interior", dim=1, set_=box([-1], [1]), p=[0.0], nu=None,
          contraction=toward([0.0], 0.5), nonexpansive={"type": "identity"},
          schedule_a=harmonic(2), schedule_b=constant(1 / 3), x1=[1.0], **identity_ops)
    # A(x) = x pushes 1 outward through the left endpoint: nu = -1, mu = 1.
    build("02_scalar_endpoint", dim=1, set_=box([1], [2]), p=[1.0], nu=[-1.0],
          contraction=toward([1.0], 0.5), nonexpansive={"type": "identity"},
          schedule_a=harmonic(2), schedule_b=constant(1 / 3), x1=[2.0],
          **{**identity_ops, "mus": [1, 1, 1]})

    p = [0.5, -0.25]
    build("03_plane_rotation", dim=2, set_=ball(p, 2.0), p=p, nu=None,
          mats=[[[2.0, 0.5], [0.5, 2.0]], [[1.5, 0.3], [-0.3, 1.2]], [[2.0, 0.0], [0.0, 3.0]]],
          cs=[0.04, 0.05, 0.05], mus=[0, 0, 0], thetas=None,
          lambdas=[0.5 * window(np.array([[2.0, 0.5], [0.5, 2.0]]), 0.04),
                   0.5 * window(np.array([[1.5, 0.3], [-0.3, 1.2]]), 0.05), 0.2],
          contraction=toward(p, 0.6),
          nonexpansive={"type": "rotation", "center": p, "plane": [0, 1], "angle": 0.7},
          schedule_a=harmonic(2), schedule_b=constant(0.3), x1=[2.0, 0.5])

    nu = np.array([1.0, 2.0]) / math.sqrt(5.0)
    build("04_plane_box_corner", dim=2, set_=box([0, 0], [1, 1]), p=[1.0, 1.0], nu=nu,
          mats=[[[1.6, -0.4], [0.4, 1.6]], [[1.2, 0.0], [0.0, 2.0]], [[2.5, 0.4], [0.1, 1.8]]],
          cs=[0.03] * 3, mus=[0.5, 1.0, 0.7], thetas=[0.5, 0.45, 0.55],
          contraction=toward([1.0, 1.0], 0.4),
          nonexpansive={"type": "projection", "set": box([0.5, 0.0], [1.0, 1.0])},
          schedule_a=harmonic(3), schedule_b=constant(0.25), x1=[0.0, 0.0])

    p = np.array([0.3, 0.7])
    anchor = p - 1e-5 * np.array([1.0, 1.0])
    build("05_plane_halfspace_face", dim=2, set_=halfspace([1, 1], 1.0), p=p, nu=[1.0, 1.0],
          mats=[[[1.3, 0.2], [0.2, 1.1]], [[2.0, 0.0], [0.5, 1.5]], [[1.8, 0.6], [-0.2, 2.2]]],
          cs=[0.02] * 3, mus=[0.3, 0.6, 0.9], thetas=[0.5, 0.5, 0.5],
          contraction=toward(anchor, 0.5), nonexpansive={"type": "identity"},
          schedule_a=harmonic(2), schedule_b=constant(1 / 3), x1=[-2.0, 1.0])

    rng = np.random.default_rng(6)
    mats, cs = zip(*[random_matrix(3, rng) for _ in range(3)])
    p = np.array([1.0, 0.5, 1.0])
    build("06_space_ball_boundary", dim=3, set_=ball([0, 0, 0], 1.5), p=p, nu=p,
          mats=mats, cs=cs, mus=[0.5, 0.5, 0.5], thetas=[0.5, 0.5, 0.5],
          contraction=toward(p, 0.7), nonexpansive={"type": "identity"},
          schedule_a=harmonic(2), schedule_b=constant(0.4), x1=[-1.0, 0.0, 0.0])

    rng = np.random.default_rng(7)
    mats, cs = zip(*[random_matrix(3, rng) for _ in range(3)])
    p = np.array([0.2, -0.1, 0.4])
    cylinder = {"type": "intersection", "sets": [ball(p, 2.0), halfspace([0, 0, 1], float(p[2] + 0.75))]}
    build("07_space_cylinder_rotation", dim=3, set_=cylinder, p=p, nu=None,
          mats=mats, cs=cs, mus=[0, 0, 0], thetas=[0.5, 0.4, 0.6],
          contraction=toward(p, 0.5),
          nonexpansive={"type": "rotation", "center": vec(p), "plane": [0, 1], "angle": 1.1},
          schedule_a=harmonic(2), schedule_b=constant(1 / 3), x1=[1.5, 1.0, 1.0])

    rng = np.random.default_rng(8)
    mats, cs = zip(*[random_matrix(3, rng) for _ in range(3)])
    p = np.array([0.5, 0.5, 0.5])
    corner = {"type": "intersection", "sets": [box([-1] * 3, [1] * 3), halfspace([1, 1, 1], 1.5)]}
    inner = {"type": "intersection", "sets": [box([0] * 3, [1] * 3), halfspace([1, 1, 1], 1.5)]}
    build("08_space_intersection_face", dim=3, set_=corner, p=p, nu=[1.0, 1.0, 1.0],
          mats=mats, cs=cs, mus=[0.4, 0.8, 0.6], thetas=[0.5, 0.5, 0.5],
          contraction=toward(p, 0.3), nonexpansive={"type": "projection", "set": inner},
          schedule_a=harmonic(2), schedule_b=constant(1 / 3), x1=[-1.0, -1.0, -1.0])

    rng = np.random.default_rng(9)
    mats, cs = zip(*[random_matrix(4, rng) for _ in range(3)])
    p = np.array([2.0, 0.3, -0.5, 1.0])
    anchor = p - 1e-5 * np.array([1.0, 0.0, 0.0, 0.0])
    build("09_hyper_box_face", dim=4, set_=box([-2] * 4, [2] * 4), p=p, nu=[1.0, 0, 0, 0],
          mats=mats, cs=cs, mus=[1.0, 0.5, 0.8], thetas=[0.5, 0.5, 0.5],
          contraction=toward(anchor, 0.5), nonexpansive={"type": "identity"},
          schedule_a={"type": "power_law", "exponent": 1.0}, schedule_b=constant(0.3),
          x1=[0.0, 0.0, 0.0, 0.0])

    rng = np.random.default_rng(10)
    mats, cs = zip(*[random_matrix(4, rng) for _ in range(3)])
    p = np.array([0.2, -0.4, 0.1, 0.6])
    build("10_hyper_ball_rotation", dim=4, set_=ball(p, 3.0), p=p, nu=None,
          mats=mats, cs=cs, mus=[0, 0, 0], thetas=[0.5, 0.5, 0.5],
          contraction=toward(p, 0.8),
          nonexpansive={"type": "rotation", "center": vec(p), "plane": [1, 3], "angle": -0.9},
          schedule_a=harmonic(5), schedule_b=constant(0.5), x1=vec(p + np.array([2.0, 1.0, -1.0, 0.5])))


if __name__ == "__main__":
    main()
