#!/usr/bin/env python3
"""Arbitrary-precision reference evaluation of the device equations.

Writes ../data/model_oracle.csv: one row per sampled input with the
expected value computed at 60 significant digits. Inputs are written as
shortest round-trip decimal doubles, so the Rust side parses exactly the
same binary values. The parameter values mirror params/dbmd_default.params.

Regenerate with:  python3 model_oracle.py
"""
import os
import random

import mpmath as mp

mp.mp.dps = 60
M = mp.mpf

K_B = 1.380649e-23
Q_E = 1.602176634e-19
PLANCK = 6.62607015e-34
M_E = 9.1093837015e-31
EPS_0 = 8.8541878128e-12

P = dict(
    temperature=300.0,
    electrolyte_width=5e-9,
    schottky_thickness=2e-9,
    tunnel_thickness=1.2e-9,
    hop_distance=0.5e-9,
    cross_section=1e-12,
    hop_frequency=1e12,
    charge_number=2.0,
    phi_a0=27.0,
    phi_a1=40.0,
    phi_ar=29.0,
    coulomb_voltage=0.025,
    window_offset=0.02,
    window_steepness=4,
    phi_s0=30.0,
    phi_s1=35.0,
    n0=3.0,
    n1=4.0,
    alpha_f=-1.5,
    richardson=1.2e6,
    relative_permittivity=40.0,
    phi_t0=116.04518121550082,
    alpha_t0=1.7,
    alpha_t1=2.0,
    r_e0=1e6,
    r_e1=1e7,
)


def derived(p):
    t = M(p["temperature"])
    kb, qe, h, me, e0 = M(K_B), M(Q_E), M(PLANCK), M(M_E), M(EPS_0)
    u_th = kb * t / qe
    de, dhop = M(p["electrolyte_width"]), M(p["hop_distance"])
    u_e = 2 / M(p["charge_number"]) * de / dhop * u_th
    a = dhop / (de / 2 - 0)
    zdot_amp = 2 * M(p["hop_frequency"]) * a
    d_s = qe**2 / (4 * mp.pi * e0 * M(p["relative_permittivity"]) * kb * t)
    alpha_s = 2 * M(p["schottky_thickness"]) / d_s
    i_s = M(p["richardson"]) * M(p["cross_section"]) * t**2
    d_t = h / (4 * mp.pi * mp.sqrt(2 * me * kb * t))
    i_t = M(p["cross_section"]) / d_t**2 * kb * qe / (2 * mp.pi * h) * t
    return dict(
        thermal_voltage=u_th,
        ref_electrolyte_voltage=u_e,
        drift_amplitude=zdot_amp,
        norm_schottky_thickness=alpha_s,
        schottky_scale=i_s,
        tunnel_scale=i_t,
        tunnel_norm_length=d_t,
        schottky_norm_length=d_s,
    )


D = derived(P)


def lin(v0, v1, z):
    return M(v0) + M(z) * (M(v1) - M(v0))


def sigma(x):
    return 1 if x > 0 else 0


def window(z):
    w0 = M(P["window_offset"])
    pp = 2 * P["window_steepness"]
    return (1 - 2 * w0) * (1 - (2 * M(z) - 1) ** pp) + w0


def arrhenius(phi, nu):
    return M(nu) * mp.exp(-M(phi))


def activation(u, z):
    a0, a1, ar = M(P["phi_a0"]), M(P["phi_a1"]), M(P["phi_ar"])
    return sigma(u) * (a1 + M(z) * (a0 - a1) - ar) + ar


def reset(u, us, z):
    return sigma(-u) * (1 - M(z)) * M(us)


def schottky(us, z):
    us = M(us)
    phi_s = lin(P["phi_s0"], P["phi_s1"], z)
    n = lin(P["n0"], P["n1"], z)
    u_th = D["thermal_voltage"]
    lower = M(P["alpha_f"]) * mp.sqrt((abs(us) - us) / (D["norm_schottky_thickness"] * u_th))
    return D["schottky_scale"] * mp.exp(-(phi_s + lower)) * (mp.exp(us / (n * u_th)) - 1)


def tunnel(ut, z):
    ut = M(ut)
    alpha = lin(P["alpha_t0"], P["alpha_t1"], z)

    def g(u):
        phi = M(P["phi_t0"]) + u / (2 * D["thermal_voltage"])
        return phi * mp.exp(-alpha * mp.sqrt(phi))

    return D["tunnel_scale"] * (g(-ut) - g(ut)) / alpha**2


def zdot(u, us, ue, z):
    arg = (reset(u, us, z) + M(ue) - M(P["coulomb_voltage"])) / D["ref_electrolyte_voltage"]
    return -D["drift_amplitude"] * window(z) * mp.exp(-activation(u, z)) * mp.sinh(arg)


def fmt(x):
    return repr(float(x)) if not isinstance(x, mp.mpf) else mp.nstr(x, 25, strip_zeros=False)


def main():
    rng = random.Random(20161019)
    rows = []
    u = lambda lo, hi: rng.uniform(lo, hi)
    for _ in range(1000):
        z = u(0, 1)
        rows.append(("window", [z], window(z)))
    for _ in range(500):
        phi, nu = u(0, 60), 10 ** u(0, 14)
        rows.append(("arrhenius", [phi, nu], arrhenius(phi, nu)))
    for _ in range(500):
        uu, z = u(-2, 3), u(0, 1)
        rows.append(("activation", [uu, z], activation(uu, z)))
    for _ in range(500):
        uu, us, z = u(-2, 3), u(-2, 2.5), u(0, 1)
        rows.append(("reset", [uu, us, z], reset(uu, us, z)))
    for _ in range(500):
        v0, v1, z = u(-50, 50), u(-50, 50), u(0, 1)
        rows.append(("linear", [v0, v1, z], lin(v0, v1, z)))
    for _ in range(2300):
        us, z = u(-2, 2.5), u(0, 1)
        rows.append(("schottky", [us, z], schottky(us, z)))
    for _ in range(2300):
        ut, z = u(-3, 3), u(0, 1)
        rows.append(("tunnel", [ut, z], tunnel(ut, z)))
    for _ in range(2400):
        uu, us, ue, z = u(-2, 3), u(-2, 2.5), u(-0.5, 1.0), u(0, 1)
        rows.append(("zdot", [uu, us, ue, z], zdot(uu, us, ue, z)))
    out = os.path.join(os.path.dirname(os.path.abspath(__file__)), "..", "data", "model_oracle.csv")
    with open(out, "w") as f:
        f.write("op,a,b,c,d,expected\n")
        for name, val in D.items():
            f.write(f"derived:{name},0,0,0,0,{mp.nstr(val, 25, strip_zeros=False)}\n")
        for op, args, exp in rows:
            args = [repr(float(a)) for a in args] + ["0"] * (4 - len(args))
            f.write(f"{op},{','.join(args)},{mp.nstr(exp, 25, strip_zeros=False)}\n")

    # Golden single-point values used by unit tests.
    print("thermal_voltage", mp.nstr(D["thermal_voltage"], 20))
    print("schottky(+0.2, z=1)", mp.nstr(schottky(0.2, 1.0), 20))
    print("schottky(-1, z=0)", mp.nstr(schottky(-1.0, 0.0), 20))
    print("tunnel(+0.5, z=0)", mp.nstr(tunnel(0.5, 0.0), 20))
    print("window(0.25; w0=0.01, p=3)", mp.nstr((1 - 2 * M(0.01)) * (1 - (2 * M(0.25) - 1) ** 6) + M(0.01), 20))
    print("arrhenius(23.026, 1e12)", mp.nstr(arrhenius(23.026, 1e12), 20))

    # Capacitive right-hand side at e = 3 V, u_e = u_t = 0, z = 1, C_e = C_t = 1 pF:
    # i solves i = i_s(e - R0 i); then du_e/dt = i/C_e, du_t/dt = (i - i_t(0))/C_t.
    r0, c = M("0.1"), M("1e-12")
    i = mp.findroot(lambda x: x - schottky(3 - r0 * x, 1.0), mp.mpf("1e-4"))
    print("transient(e=3, z=1)", mp.nstr(i / c, 20), mp.nstr((i - tunnel(0, 1.0)) / c, 20), mp.nstr(i, 20))


if __name__ == "__main__":
    main()
