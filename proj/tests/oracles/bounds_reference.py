"""High-precision reference values for the analytic bound tests.

Run with: python3 tests/oracles/bounds_reference.py
Values printed here are frozen into tests/bounds_test.cpp.
"""
from mpmath import mp, mpf, binomial, exp, log, ceil, e, floor

mp.dps = 50


def thm1(k, kp, eps1, eps2, mu, delta):
    m = k - kp
    alpha = floor((1 - mu) * m)
    bad1 = exp(-(mpf(1) / 6) * mu * (m - 1))
    terms = []
    for r in range(1, kp + 1):
        s = alpha - r
        if s < 0 or s > m:
            terms.append(mpf(0))
            continue
        terms.append(binomial(kp, r) * binomial(m, s) * mpf(eps2) ** (r * s))
    t1 = terms[0] if terms else mpf(0)
    v = (1 - mu) / (10 * mu) * k * mpf(eps2) ** ((mpf(1) / 2 - mu) * m - 1)
    bad2 = (1 + 2 * v) * t1
    return dict(bad1=bad1, t1=t1, v=v, bad2=bad2, total=min(bad1 + bad2, 1), direct=sum(terms))


def thm3(eta, m, alpha, T):
    p = (1 - mpf(eta)) ** m
    return exp(-2 * T * (p - (1 - mpf(alpha))) ** 2)


def min_rounds(p_clean, alpha, delta):
    margin = mpf(p_clean) - (1 - mpf(alpha))
    return ceil(log(1 / mpf(delta)) / (2 * margin ** 2)), log(1 / mpf(delta)) / (2 * margin ** 2)


if __name__ == "__main__":
    print("exp weights k=3:", [mpf(1) / mpf("2.71"), mpf("0.9") / mpf("2.71"), mpf("0.81") / mpf("2.71")])
    r = thm1(20, 4, mpf("0.01"), mpf("0.01"), mpf("0.25"), mpf("0.5"))
    for key, val in r.items():
        print("thm1 k=20 k'=4 mu=.25 eps2=.01", key, mp.nstr(val, 20))
    r = thm1(20, 4, 0, 0, mpf("0.25"), mpf("0.5"))
    print("thm1 eps=0 total", mp.nstr(r["total"], 20), "t1", r["t1"])
    print("eps2 regime limit k=20 k'=4 mu=.25 delta=.5:",
          mp.nstr(((1 - mpf("0.25")) * 16 - 1) / ((1 + mpf("0.5")) * e * 16), 20))
    print("thm3 eta=.1 m=2 a=.5 T=20:", mp.nstr(thm3("0.1", 2, "0.5", 20), 20))
    print("min rounds .81:", min_rounds("0.81", "0.5", "0.05"))
    print("min rounds .51:", min_rounds("0.51", "0.5", "0.05"))
