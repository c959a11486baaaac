#include "pbdtest/bounds.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace pbdtest {

double poisson_tail_bound(double lambda, double x) {
  if (!(lambda > 0.0)) throw std::invalid_argument("poisson_tail_bound: lambda must be positive");
  const double d = x - lambda;
  const double exponent = x >= lambda ? d * d / (2.0 * x) : d * d / (2.0 * lambda);
  return std::min(1.0, std::exp(-exponent));
}

double indicator_chernoff_bound(double sigma, double lambda) {
  if (!(lambda > 0.0) || !(lambda < 2.0 * sigma)) {
    throw std::invalid_argument("indicator_chernoff_bound: need 0 < lambda < 2 sigma");
  }
  return 2.0 * std::exp(-lambda * lambda / 4.0);
}

TpApproxBounds tp_approx_bounds(const Pbd& pbd) {
  const double var = pbd.variance();
  if (!(var > 0.0)) throw std::domain_error("tp_approx_bounds: variance is zero");
  const double third = pbd.third_moment_term();
  const double sigma = std::sqrt(var);

  TpApproxBounds out;
  const double tv_num = 2.0 + std::sqrt(third);
  out.tv.value = tv_num / var;
  out.tv.terms = {{"numerator", tv_num}, {"denominator", var}, {"third_moment_term", third}};

  const double qmax = out.tv.value + 1.0 / (2.3 * sigma);
  out.q_max.value = qmax;
  out.q_max.terms = {{"tv_bound", out.tv.value}, {"sigma", sigma}};

  // The modal probability enters through its upper bound, which keeps the
  // result a valid bound without needing the PMF.
  const double linf_num = 2.0 + 2.0 * std::sqrt(qmax * third);
  out.ell_inf.value = linf_num / var;
  out.ell_inf.terms = {{"numerator", linf_num},
                       {"denominator", var},
                       {"q_max", qmax},
                       {"third_moment_term", third}};
  return out;
}

double tp_pair_tv_bound(const TranslatedPoissonParams& a, const TranslatedPoissonParams& b) {
  const double min_var = std::min(a.sigma2(), b.sigma2());
  return std::abs(a.mu() - b.mu()) / std::sqrt(min_var) +
         (std::abs(a.sigma2() - b.sigma2()) + 1.0) / min_var;
}

}  // namespace pbdtest
