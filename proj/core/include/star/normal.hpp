#pragma once

// Standard normal helpers that stay accurate far into both tails.

namespace star::normal {

double pdf(double x);
double cdf(double x);
/// Upper tail 1 - Phi(x) without cancellation.
double sf(double x);
double log_cdf(double x);
double log_sf(double x);
/// Phi^{-1}(p) for p in (0, 1).
double quantile(double p);
/// log(Phi(b) - Phi(a)) for a <= b; either end may be infinite.
double log_diff_cdf(double a, double b);
/// log(1 - exp(x)) for x <= 0.
double log1mexp(double x);
/// log(exp(a) + exp(b)).
double log_add_exp(double a, double b);

}  // namespace star::normal
