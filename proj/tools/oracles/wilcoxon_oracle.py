import numpy as np, scipy
from scipy.stats import wilcoxon
print("# scipy", scipy.__version__)
rng = np.random.default_rng(20240601)
def fmt(v): return "{" + ", ".join(repr(float(x)) for x in v) + "}"
cases = []
# exact, no ties, various n
for n in (6, 9, 12, 18, 25):
    a = np.round(rng.normal(0.6, 0.1, n), 6); b = np.round(a + rng.normal(0.02, 0.05, n), 6)
    for alt in ("two-sided", "greater", "less"):
        r = wilcoxon(a, b, alternative=alt, method="exact")
        cases.append(("exact", alt, a, b, float(r.pvalue), float(r.statistic)))
# approx with ties and correction
for n in (30, 40):
    a = np.round(rng.normal(0.5, 0.1, n), 2); b = np.round(a + rng.normal(0.01, 0.04, n), 2)
    for alt in ("two-sided", "greater", "less"):
        r = wilcoxon(a, b, alternative=alt, method="approx", correction=True)
        cases.append(("normal", alt, a, b, float(r.pvalue), float(r.statistic)))
for c in cases:
    print(f'{{"{c[0]}", "{c[1]}", {fmt(c[2])}, {fmt(c[3])}, {c[4]!r}, {float(c[5])!r}}},')
# self-sufficiency pair with two-sided p near 0.28 (exact)
for s in range(2000):
    r2 = np.random.default_rng(s)
    a = np.round(r2.uniform(0.4, 0.6, 15), 4); b = np.round(a + r2.normal(0.005, 0.03, 15), 4)
    if len(set(np.abs(a-b))) < 15 or np.any(a == b): continue
    p = wilcoxon(a, b, method="exact").pvalue
    if abs(p - 0.2801) < 0.01:
        print("# p028", s, float(p)); print(fmt(a)); print(fmt(b)); break
