#!/usr/bin/env python3
"""Independent reference values for the affine-cap test configuration.

phi and I_F come from scipy's collocation BVP solver on [0, L] with a
local-exponential far-field condition. Barrier quantities use raw
exponentials e^{alpha x} and small linear solves, never the scale-function
closed forms used by the C++ library. Prints JSON.
"""
import argparse
import json

import numpy as np
from scipy.integrate import solve_bvp
from scipy.optimize import brentq


def solve(mu, sigma, q, c0, c1, L, tol):
    hv = 0.5 * sigma * sigma
    F = lambda x: c0 + c1 * x

    def theta2(x):
        m = mu - F(x)
        return (-m - np.sqrt(m * m + 2.0 * q * sigma * sigma)) / (sigma * sigma)

    def rhs_phi(x, y):
        return np.vstack([y[1], (q * y[0] - (mu - F(x)) * y[1]) / hv])

    def rhs_if(x, y):
        return np.vstack([y[1], (q * y[0] - (mu - F(x)) * y[1] - F(x)) / hv])

    c = c1 / (c1 + q)
    a = ((mu - c0) * c + c0) / q
    t2 = theta2(L)
    xs = np.linspace(0.0, L, 4001)

    phi = solve_bvp(rhs_phi, lambda ya, yb: np.array([ya[0] - 1.0, yb[1] - t2 * yb[0]]),
                    xs, np.vstack([np.exp(t2 * xs), t2 * np.exp(t2 * xs)]), tol=tol, max_nodes=200000)
    # Far field: I_F minus the affine particular solution decays like phi.
    iff = solve_bvp(rhs_if, lambda ya, yb: np.array([ya[1], (yb[1] - c) - t2 * (yb[0] - (a + c * L))]),
                    xs, np.vstack([a + c * xs, c + 0 * xs]), tol=tol, max_nodes=200000)
    assert phi.success and iff.success
    return phi, iff


def main():
    ap = argparse.ArgumentParser()
    ap.add_argument("--mu", type=float, default=1.0)
    ap.add_argument("--sigma", type=float, default=1.0)
    ap.add_argument("--q", type=float, default=1.0)
    ap.add_argument("--c0", type=float, default=0.5)
    ap.add_argument("--c1", type=float, default=0.5)
    ap.add_argument("--betas", type=float, nargs="+", default=[1.2, 2.0])
    ap.add_argument("--L", type=float, default=20.0)
    ap.add_argument("--tol", type=float, default=1e-11)
    args = ap.parse_args()

    mu, sigma, q = args.mu, args.sigma, args.q
    phi, iff = solve(mu, sigma, q, args.c0, args.c1, args.L, args.tol)
    P = lambda x: phi.sol(x)
    U = lambda x: iff.sol(x)

    s2 = sigma * sigma
    d = np.sqrt(mu * mu + 2 * q * s2)
    a1, a2 = (-mu + d) / s2, (-mu - d) / s2

    # No injection: k (e^{a1 x} - e^{a2 x}) left of b, I_F + B phi right of b, C1 at b.
    def jd(b):
        e = lambda x: np.exp(a1 * x) - np.exp(a2 * x)
        de = lambda x: a1 * np.exp(a1 * x) - a2 * np.exp(a2 * x)
        p, u = P(b), U(b)
        k, B = np.linalg.solve([[e(b), -p[0]], [de(b), -p[1]]], [u[0], u[1]])
        return k, B

    def jd_slope_at_b(b):
        k, _ = jd(b)
        return k * (a1 * np.exp(a1 * b) - a2 * np.exp(a2 * b))

    g = lambda b: jd_slope_at_b(b) - 1.0
    if g(1e-4) > 0.0 and g(5.0) < 0.0:
        bd = brentq(g, 1e-4, 5.0, xtol=1e-14)
        kd, _ = jd(bd)
        vdp0 = float(kd * (a1 - a2))
    else:
        # Paying at every level: V_d = I_F - I_F(0) phi.
        bd = 0.0
        vdp0 = float(U(0.0)[1] - U(0.0)[0] * P(0.0)[1])

    # Forced injection: r1 e^{a1 x} + r2 e^{a2 x} left of b with slope beta at 0.
    def jc(b, beta):
        p, u = P(b), U(b)
        M = [[np.exp(a1 * b), np.exp(a2 * b), -p[0]],
             [a1 * np.exp(a1 * b), a2 * np.exp(a2 * b), -p[1]],
             [a1, a2, 0.0]]
        return np.linalg.solve(M, [u[0], u[1], beta])

    out = {
        "I_F_0": float(U(0.0)[0]),
        "phi_prime_0": float(P(0.0)[1]),
        "b_d": bd,
        "vd_prime_zero": vdp0,
        "cases": [],
    }
    for beta in args.betas:
        def eq(b):
            r1, r2, _ = jc(b, beta)
            return r1 * a1 * np.exp(a1 * b) + r2 * a2 * np.exp(a2 * b) - 1.0
        bc = brentq(eq, 1e-4, 5.0, xtol=1e-14)
        r1, r2, _ = jc(bc, beta)
        out["cases"].append({"beta": beta, "b_c": bc, "vc_zero": float(r1 + r2)})
    print(json.dumps(out, indent=2))


if __name__ == "__main__":
    main()
