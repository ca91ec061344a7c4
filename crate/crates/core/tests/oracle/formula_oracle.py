#!/usr/bin/env python3
"""Independent 50-digit evaluation of every closed-form bound in the crate.

Regenerate the frozen fixture with:

    python3 crates/core/tests/oracle/formula_oracle.py > crates/core/tests/fixtures/formula_oracle.json

The Rust code is never consulted; each formula is written out again here in
mpmath so that the acceptance suite compares two separate evaluation paths.
"""
import json
import math
import random

import mpmath as mp

mp.mp.dps = 50
rng = random.Random(20240611)
POINTS = 20


def f(x):
    return float(x)


def u(lo, hi):
    return lo + (hi - lo) * rng.random()


def quasi_const(alpha):
    return mp.power(2, 1 / mp.mpf(alpha) - 1)


def c_net(alpha):
    c = quasi_const(alpha)
    return 2 * c * c + c


def gamma_points():
    xs = [0.05, 0.5, 1.0, 5.0, 30.0] + [u(0.05, 30.0) for _ in range(POINTS - 5)]
    return [{"x": x, "value": f(mp.gamma(x))} for x in xs]


def moment_constant(alpha, p):
    a, q = mp.mpf(alpha), mp.mpf(p)
    return (mp.power(2, q) * mp.gamma((1 + q) / 2) * mp.gamma(1 - q / a)
            / (mp.gamma(1 - q / 2) * mp.gamma(mp.mpf(1) / 2)))


def tail_constant(alpha):
    a = mp.mpf(alpha)
    return (1 - a) / (mp.gamma(2 - a) * mp.cos(mp.pi * a / 2))


def stable_points():
    out = []
    for _ in range(POINTS):
        alpha = u(0.1, 0.95)
        p = alpha * u(0.05, 0.95)
        out.append({"alpha": alpha, "p": p,
                    "moment_constant": f(moment_constant(alpha, p)),
                    "tail_constant": f(tail_constant(alpha))})
    return out


def concentration_points():
    out = []
    for _ in range(POINTS):
        alpha = u(0.1, 0.95)
        p = alpha * u(0.1, 0.9)
        gamma = u(0.5, 3.0)
        c0 = u(0.05, 0.45)
        c_prime = u(0.5, 3.0)
        tc = u(0.3, 2.0)
        c_con_env = u(0.5, 5.0)
        eps = u(0.05, 2.0)
        m = rng.randint(1, 10**6)
        a, q, g, e = map(mp.mpf, (alpha, p, gamma, eps))
        r = a / q
        t = mp.power(mp.mpf(c_prime) / e, 1 / (r - 1)) * mp.power(m, c0)
        hoeff = 2 * mp.exp(-m * e * e / (8 * t * t))
        k = mp.mpf(tc) * mp.power(g, a) / (r - 1)
        tail = 4 * k / e * mp.power(t, 1 - r)
        c_con = mp.mpf(c0) * (r - 1)
        identity = 4 * k / mp.mpf(c_prime) * mp.power(m, -c_con)
        out.append({
            "alpha": alpha, "p": p, "gamma": gamma, "c0": c0,
            "c_prime": c_prime, "tail_constant": tc, "c_con_envelope": c_con_env,
            "epsilon": eps, "m": m,
            "threshold": f(t), "hoeffding": f(hoeff), "tail": f(tail),
            "total": f(hoeff + tail), "identity": f(identity),
            "envelope": f(c_con_env * mp.power(m, -c_con)),
            "k_const": f(k), "c_con": f(c_con),
        })
    return out


def covering_points():
    out = []
    for _ in range(POINTS):
        alpha = u(0.1, 0.95)
        eps = u(0.05, 0.95)
        k = rng.randint(1, 6)
        n = rng.randint(k, 60)
        v = mp.power(c_net(alpha) / eps, k) * mp.binomial(n, k)
        out.append({"alpha": alpha, "epsilon": eps, "k": k, "dim": n,
                    "c_net": f(c_net(alpha)), "quasi_constant": f(quasi_const(alpha)),
                    "log10": f(mp.log10(v)), "value": f(v)})
    return out


def binomial_points():
    out = []
    for i in range(POINTS):
        n = rng.randint(1, 300)
        k = rng.randint(1, n)
        upper = mp.power(mp.e * n / k, k)
        out.append({"dim": n, "k": k, "exact": str(math.comb(n, k)),
                    "log10_upper": f(mp.log10(upper)), "upper": f(upper)})
    return out


def net_eps_points():
    out = []
    for _ in range(POINTS):
        delta = u(0.01, 0.99)
        p = u(0.02, 0.98)
        out.append({"delta": delta, "p": p,
                    "epsilon": f(mp.power(mp.mpf(delta) / 3, 1 / mp.mpf(p)))})
    return out


def complexity(n, k, delta, eta, p, alpha, c0, c_con_const, exact):
    q = mp.mpf(p)
    c_con = mp.mpf(c0) * (mp.mpf(alpha) / q - 1)
    comb = mp.binomial(n, k) if exact else mp.power(mp.e * n / k, k)
    inner = (2 * mp.mpf(c_con_const) / eta * mp.power(c_net(alpha), k)
             * mp.power(3 / mp.mpf(delta), k / q) * comb)
    return mp.log10(inner) / c_con


def complexity_points():
    out = [{
        "dim": 4, "k": 1, "delta": 0.5, "eta": 0.5, "p": 0.25, "alpha": 0.5,
        "c0": 0.25, "c_con_const": 1.0,
    }]
    for _ in range(POINTS - 1):
        k = rng.randint(1, 5)
        alpha = u(0.15, 0.95)
        out.append({
            "dim": rng.randint(k, 10**4), "k": k, "delta": u(0.05, 0.95),
            "eta": u(0.05, 0.95), "p": alpha * u(0.1, 0.9), "alpha": alpha,
            "c0": u(0.05, 0.45), "c_con_const": u(0.1, 10.0),
        })
    for row in out:
        args = (row["dim"], row["k"], row["delta"], row["eta"], row["p"],
                row["alpha"], row["c0"], row["c_con_const"])
        row["log10_m_binomial"] = f(complexity(*args, exact=True))
        row["log10_m_en_over_k"] = f(complexity(*args, exact=False))
    return out


def main():
    fixture = {
        "gamma": gamma_points(),
        "stable": stable_points(),
        "concentration": concentration_points(),
        "covering": covering_points(),
        "binomial": binomial_points(),
        "net_epsilon": net_eps_points(),
        "complexity": complexity_points(),
    }
    print(json.dumps(fixture, indent=1))


if __name__ == "__main__":
    main()
