"""Freeze Shapiro-Wilk and Wilcoxon reference values from SciPy.

SciPy's shapiro wraps the original AS R94 Fortran routine; its wilcoxon is
an independent implementation of the signed-rank test. Values are pasted
into tests/test_stats.cpp.
"""
import numpy as np
from scipy import stats

sw12 = [2.31, 0.57, 4.12, 1.02, 3.35, 2.88, 0.11, 5.73, 1.49, 2.05, 3.91, 1.67]
print("shapiro n=12", "%.10f %.10f" % tuple(stats.shapiro(sw12)))

sw3 = [1.0, 2.0, 4.0]
print("shapiro n=3", "%.10f %.10f" % tuple(stats.shapiro(sw3)))

rng = np.random.default_rng(7)
sw_exp = np.round(rng.exponential(size=40), 6)
print("shapiro exp40 data", ",".join("%.6f" % v for v in sw_exp))
print("shapiro exp40", "%.10f %.10f" % tuple(stats.shapiro(sw_exp)))

# signed-rank with ties, normal approximation + continuity correction
d = [1.5, -0.5, 2.0, 2.0, -1.0, 3.0, 0.5, -2.0, 4.0, 1.0, 2.5, -0.5, 3.5, 1.0, 0.0,
     2.0, -1.5, 5.0, 0.5, 1.0, -3.0, 2.0, 4.5, 1.5, 2.0, 3.0, -0.5, 1.0]
for alt in ["two-sided", "less", "greater"]:
    r = stats.wilcoxon(d, zero_method="wilcox", correction=True, alternative=alt,
                       method="approx")
    print("wilcoxon ties", alt, "%.12f" % r.pvalue)
r = stats.wilcoxon(d, zero_method="wilcox", alternative="greater", method="approx")
print("wilcoxon ties W+ (statistic for greater)", r.statistic)

e = [0.3, -1.2, 2.5, 0.8, 1.7, -0.4, 3.1, 0.9, -2.2, 1.4, 0.6, 2.9]
for alt in ["two-sided", "less", "greater"]:
    r = stats.wilcoxon(e, alternative=alt, method="exact")
    print("wilcoxon exact", alt, "%.12f" % r.pvalue, r.statistic)
