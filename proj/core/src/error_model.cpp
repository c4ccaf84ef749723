#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <random>

#include "meritcurve/error.hpp"
#include "meritcurve/storage_opt.hpp"

namespace meritcurve {

namespace {

constexpr double kLog2Pi = 1.8378770664093453;  // log(2 pi)

double log_norm_cdf(double x) {
  if (x > -30.0) return std::log(0.5 * std::erfc(-x / std::numbers::sqrt2));
  // Mills-ratio asymptote once erfc underflows.
  return -0.5 * x * x - std::log(-x) - 0.5 * kLog2Pi;
}

bool finite_positive(double v) { return std::isfinite(v) && v > 0.0; }

}  // namespace

std::string_view to_string(ErrorFamily f) noexcept {
  switch (f) {
    case ErrorFamily::Gaussian: return "gaussian";
    case ErrorFamily::StudentT: return "student_t";
    case ErrorFamily::Laplace: return "laplace";
    case ErrorFamily::GenNormal: return "gennorm";
    case ErrorFamily::SkewNormal: return "skew_normal";
    case ErrorFamily::Cauchy: return "cauchy";
  }
  return "?";
}

ErrorFamily parse_error_family(std::string_view s) {
  for (ErrorFamily f : kAllErrorFamilies)
    if (to_string(f) == s) return f;
  throw Error(Errc::InvalidArgument, "unknown error family '" + std::string(s) + "'");
}

int ErrorModel::parameter_count(ErrorFamily f) noexcept {
  switch (f) {
    case ErrorFamily::Gaussian:
    case ErrorFamily::Laplace:
    case ErrorFamily::Cauchy: return 2;
    default: return 3;
  }
}

ErrorModel ErrorModel::make(ErrorFamily family, std::vector<double> params, int hour) {
  ErrorModel m;
  m.hour = hour;
  m.family = family;
  m.params = std::move(params);
  m.validate();
  return m;
}

void ErrorModel::validate() const {
  if (static_cast<int>(params.size()) != parameter_count(family))
    throw Error(Errc::InvalidArgument, std::string(to_string(family)) + " needs " +
                                           std::to_string(parameter_count(family)) + " parameters");
  if (!std::isfinite(params[0])) throw Error(Errc::InvalidArgument, "location must be finite");
  if (!finite_positive(params[1])) throw Error(Errc::InvalidArgument, "scale must be > 0");
  if (params.size() == 3) {
    const bool shape_ok = family == ErrorFamily::SkewNormal ? std::isfinite(params[2]) : finite_positive(params[2]);
    if (!shape_ok) throw Error(Errc::InvalidArgument, "invalid shape parameter");
  }
}

double ErrorModel::log_pdf(double x) const {
  const double loc = params[0], s = params[1];
  const double z = (x - loc) / s;
  switch (family) {
    case ErrorFamily::Gaussian: return -0.5 * kLog2Pi - std::log(s) - 0.5 * z * z;
    case ErrorFamily::StudentT: {
      const double nu = params[2];
      return std::lgamma(0.5 * (nu + 1)) - std::lgamma(0.5 * nu) - 0.5 * std::log(nu * std::numbers::pi) -
             std::log(s) - 0.5 * (nu + 1) * std::log1p(z * z / nu);
    }
    case ErrorFamily::Laplace: return -std::log(2 * s) - std::abs(z);
    case ErrorFamily::GenNormal: {
      const double beta = params[2];
      return std::log(beta) - std::log(2 * s) - std::lgamma(1 / beta) - std::pow(std::abs(z), beta);
    }
    case ErrorFamily::SkewNormal:
      return std::numbers::ln2 - std::log(s) - 0.5 * kLog2Pi - 0.5 * z * z + log_norm_cdf(params[2] * z);
    case ErrorFamily::Cauchy: return -std::log(std::numbers::pi * s) - std::log1p(z * z);
  }
  return std::numeric_limits<double>::quiet_NaN();
}

double ErrorModel::sample(Rng& rng) const {
  const double loc = params[0], s = params[1];
  switch (family) {
    case ErrorFamily::Gaussian: return std::normal_distribution<double>(loc, s)(rng);
    case ErrorFamily::StudentT: return loc + s * std::student_t_distribution<double>(params[2])(rng);
    case ErrorFamily::Laplace: {
      const double u = std::uniform_real_distribution<double>(-0.5, 0.5)(rng);
      return loc - s * (u < 0 ? -1.0 : 1.0) * std::log1p(-2.0 * std::abs(u));
    }
    case ErrorFamily::GenNormal: {
      const double beta = params[2];
      const double g = std::gamma_distribution<double>(1.0 / beta, 1.0)(rng);
      const bool neg = std::bernoulli_distribution(0.5)(rng);
      const double r = s * std::pow(g, 1.0 / beta);
      return loc + (neg ? -r : r);
    }
    case ErrorFamily::SkewNormal: {
      const double delta = params[2] / std::sqrt(1.0 + params[2] * params[2]);
      std::normal_distribution<double> n;
      const double u0 = n(rng), v = n(rng);
      const double u1 = delta * u0 + std::sqrt(1.0 - delta * delta) * v;
      return loc + s * (u0 >= 0 ? u1 : -u1);
    }
    case ErrorFamily::Cauchy: return std::cauchy_distribution<double>(loc, s)(rng);
  }
  return std::numeric_limits<double>::quiet_NaN();
}

namespace {

double total_log_likelihood(const ErrorModel& m, std::span<const double> x) {
  double acc = 0.0;
  for (double v : x) acc += m.log_pdf(v);
  return acc;
}

// Numerical MLE on standardised data y = (x - c) / s; parameters are
// (location, log scale[, shape transform]).
ErrorModel numeric_fit(std::span<const double> y, ErrorFamily family, std::vector<std::vector<double>> starts) {
  auto unpack = [&](std::span<const double> t) {
    std::vector<double> p{t[0], std::exp(t[1])};
    if (family == ErrorFamily::StudentT) p.push_back(std::exp(std::clamp(t[2], std::log(0.05), std::log(1e6))));
    if (family == ErrorFamily::GenNormal) p.push_back(std::exp(std::clamp(t[2], std::log(0.05), std::log(100.0))));
    if (family == ErrorFamily::SkewNormal) p.push_back(std::clamp(t[2], -1e3, 1e3));
    return p;
  };
  auto objective = [&](std::span<const double> t) {
    if (!(std::abs(t[1]) < 50)) return std::numeric_limits<double>::infinity();
    ErrorModel m;
    m.family = family;
    m.params = unpack(t);
    const double ll = total_log_likelihood(m, y);
    return std::isfinite(ll) ? -ll / static_cast<double>(y.size()) : std::numeric_limits<double>::infinity();
  };
  MinimizeResult best;
  best.value = std::numeric_limits<double>::infinity();
  for (auto& s : starts) {
    auto r = minimize_simplex(objective, s, std::vector<double>(s.size(), 0.3), 2000, 1e-6);
    // Restart once from the optimum to shake off a collapsed simplex.
    r = minimize_simplex(objective, r.x, std::vector<double>(s.size(), 0.02), 2000, 1e-8);
    if (r.value < best.value) best = r;
  }
  if (!std::isfinite(best.value)) throw Error(Errc::FitFailure, std::string(to_string(family)) + ": no finite likelihood");
  ErrorModel m;
  m.family = family;
  m.params = unpack(best.x);
  return m;
}

}  // namespace

ErrorModel fit_family(std::span<const double> samples, ErrorFamily family) {
  const auto n = samples.size();
  if (n < 2) throw Error(Errc::FitFailure, "need at least two samples");
  for (double v : samples)
    if (!std::isfinite(v)) throw Error(Errc::FitFailure, "non-finite sample");
  const double mu = mean(samples);
  const double sd = std::sqrt(variance(samples));
  if (!(sd > 0.0)) throw Error(Errc::FitFailure, "samples have zero variance");
  const double med = percentile(samples, 50);

  ErrorModel m;
  m.family = family;
  if (family == ErrorFamily::Gaussian) {
    m.params = {mu, sd};
  } else if (family == ErrorFamily::Laplace) {
    double mad = 0.0;
    for (double v : samples) mad += std::abs(v - med);
    m.params = {med, mad / static_cast<double>(n)};
    if (!(m.params[1] > 0.0)) throw Error(Errc::FitFailure, "laplace: zero absolute deviation");
  } else {
    std::vector<double> y(n);
    for (std::size_t i = 0; i < n; ++i) y[i] = (samples[i] - med) / sd;
    const double ymean = (mu - med) / sd;
    std::vector<std::vector<double>> starts;
    switch (family) {
      case ErrorFamily::StudentT: starts = {{0.0, 0.0, std::log(5.0)}, {ymean, 0.0, std::log(30.0)}}; break;
      case ErrorFamily::GenNormal: starts = {{0.0, std::log(std::sqrt(2.0)), std::log(2.0)}, {0.0, -0.3, 0.0}}; break;
      case ErrorFamily::SkewNormal: {
        // Method-of-moments start from the sample skewness.
        const double g = std::clamp(skewness(samples), -0.99, 0.99);
        const double g23 = std::pow(std::abs(g), 2.0 / 3.0);
        const double d = std::copysign(
            std::sqrt(std::numbers::pi / 2 * g23 / (g23 + std::pow((4 - std::numbers::pi) / 2, 2.0 / 3.0))), g);
        const double a = d / std::sqrt(1 - d * d);
        const double w = 1.0 / std::sqrt(1 - 2 * d * d / std::numbers::pi);
        starts = {{ymean - w * d * std::sqrt(2 / std::numbers::pi), std::log(w), a}, {ymean, 0.0, 0.0}};
        break;
      }
      case ErrorFamily::Cauchy: {
        const double iqr = (percentile(samples, 75) - percentile(samples, 25)) / sd;
        starts = {{0.0, std::log(std::max(iqr / 2, 1e-3))}};
        break;
      }
      default: break;
    }
    m = numeric_fit(y, family, starts);
    m.params[0] = med + sd * m.params[0];
    m.params[1] *= sd;
  }
  m.validate();
  m.log_likelihood = total_log_likelihood(m, samples);
  if (!std::isfinite(m.log_likelihood)) throw Error(Errc::FitFailure, std::string(to_string(family)) + ": non-finite log-likelihood");
  m.bic = ErrorModel::parameter_count(family) * std::log(static_cast<double>(n)) - 2.0 * m.log_likelihood;
  return m;
}

ErrorFit fit_error_model(std::span<const double> samples, std::span<const ErrorFamily> families, int hour) {
  if (samples.size() < 30) throw Error(Errc::InvalidArgument, "error-model fitting needs at least 30 samples");
  ErrorFit out;
  for (ErrorFamily f : families) {
    try {
      auto m = fit_family(samples, f);
      m.hour = hour;
      out.candidates.push_back(std::move(m));
    } catch (const Error& e) {
      out.failures.push_back(std::string(to_string(f)) + ": " + e.what());
    }
  }
  if (out.candidates.empty()) throw Error(Errc::AllFailed, "no error family could be fitted");
  std::stable_sort(out.candidates.begin(), out.candidates.end(),
                   [](const ErrorModel& a, const ErrorModel& b) { return a.bic < b.bic; });
  out.best = out.candidates.front();
  return out;
}

}  // namespace meritcurve
