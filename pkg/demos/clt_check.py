"""Monte Carlo check of the pointwise normal approximation for the location fit.

Compares the empirical variance of the jackknife location estimate at x = 0.3
with the asymptotic variance, for independent errors and for 2-dependent
errors whose visits are spread across the domain.
"""

from ladcurves import DesignSpec, ErrorModel, default_curves, verify_clt_mu

curves = default_curves()
for label, model, order in [("iid", ErrorModel.iid(), "shuffled"),
                            ("2-dependent", ErrorModel.m_dependent(2), "strided")]:
    rep = verify_clt_mu(DesignSpec.balanced(100, 100, visit_order=order), curves, model, 0.3,
                        "optimal", 300, seed=3, jackknife=True)
    print(f"{label:12s} variance ratio {rep.variance_ratio:.3f}  95% CI coverage {rep.ci_coverage:.3f}")
