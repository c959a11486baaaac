#pragma once

#include <map>
#include <string>

#include "pbdtest/distribution.hpp"

namespace pbdtest {

/// A closed-form bound together with the terms it was assembled from.
struct BoundReport {
  double value = 0.0;
  std::map<std::string, double> terms;
};

/// Bounds on how far a PBD is from the translated Poisson with the same mean
/// and variance: total variation, l-infinity, and the modal probability.
struct TpApproxBounds {
  BoundReport tv;
  BoundReport ell_inf;
  BoundReport q_max;
};

/// Chernoff tail for Poisson(lambda): Pr(X >= x) for x >= lambda, Pr(X <= x)
/// for x <= lambda.
double poisson_tail_bound(double lambda, double x);

/// Pr(|X - E X| > lambda * sigma) < 2 exp(-lambda^2 / 4) for sums of
/// independent indicators, valid for 0 < lambda < 2 sigma.
double indicator_chernoff_bound(double sigma, double lambda);

/// Throws std::domain_error when the PBD has zero variance.
TpApproxBounds tp_approx_bounds(const Pbd& pbd);

/// TV bound between two translated Poisson distributions.
double tp_pair_tv_bound(const TranslatedPoissonParams& a, const TranslatedPoissonParams& b);

}  // namespace pbdtest
