#include "meritcurve/numerics.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <cstdio>
#include <memory>
#include <numeric>

#include <boost/math/tools/toms748_solve.hpp>
#include <gsl/gsl_errno.h>
#include <gsl/gsl_multimin.h>

#include "meritcurve/error.hpp"

namespace meritcurve {

std::uint64_t derive_seed(std::uint64_t root, std::uint64_t stream) noexcept {
  std::uint64_t z = root + 0x9E3779B97F4A7C15ULL * (stream + 1);
  z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
  z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
  return z ^ (z >> 31);
}

std::string format_double(double v) {
  if (v == 0.0) return std::signbit(v) ? "-0" : "0";
  char buf[64];
  auto [ptr, ec] = std::to_chars(buf, buf + sizeof(buf), v);
  if (ec != std::errc{}) throw Error(Errc::Format, "cannot format double");
  return std::string(buf, ptr);
}

std::optional<double> parse_double(std::string_view s) {
  while (!s.empty() && (s.front() == ' ' || s.front() == '\t')) s.remove_prefix(1);
  while (!s.empty() && (s.back() == ' ' || s.back() == '\t' || s.back() == '\r')) s.remove_suffix(1);
  if (s.empty()) return std::nullopt;
  if (s.front() == '+') s.remove_prefix(1);
  double v = 0.0;
  auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
  if (ec != std::errc{} || ptr != s.data() + s.size()) return std::nullopt;
  return v;
}

std::optional<long long> parse_int(std::string_view s) {
  while (!s.empty() && (s.front() == ' ' || s.front() == '\t')) s.remove_prefix(1);
  while (!s.empty() && (s.back() == ' ' || s.back() == '\t' || s.back() == '\r')) s.remove_suffix(1);
  if (s.empty()) return std::nullopt;
  long long v = 0;
  auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
  if (ec != std::errc{} || ptr != s.data() + s.size()) return std::nullopt;
  return v;
}

std::uint64_t fnv1a(std::string_view bytes, std::uint64_t h) noexcept {
  for (unsigned char c : bytes) {
    h ^= c;
    h *= 1099511628211ULL;
  }
  return h;
}

std::string hex64(std::uint64_t v) {
  char buf[17];
  std::snprintf(buf, sizeof(buf), "%016llx", static_cast<unsigned long long>(v));
  return buf;
}

double mean(std::span<const double> v) {
  if (v.empty()) throw Error(Errc::InvalidArgument, "mean of empty sequence");
  double s = 0.0;
  for (double x : v) s += x;
  return s / static_cast<double>(v.size());
}

double variance(std::span<const double> v) {
  const double m = mean(v);
  double s = 0.0;
  for (double x : v) s += (x - m) * (x - m);
  return s / static_cast<double>(v.size());
}

namespace {

struct Moments {
  double m2 = 0, m3 = 0, m4 = 0;
};

Moments central_moments(std::span<const double> v) {
  const double m = mean(v);
  Moments out;
  for (double x : v) {
    const double d = x - m;
    const double d2 = d * d;
    out.m2 += d2;
    out.m3 += d2 * d;
    out.m4 += d2 * d2;
  }
  const double n = static_cast<double>(v.size());
  out.m2 /= n;
  out.m3 /= n;
  out.m4 /= n;
  return out;
}

// NumPy's _lerp: symmetric form that is exact at both ends.
double lerp(double a, double b, double t) {
  const double diff = b - a;
  if (t >= 0.5) return b - diff * (1.0 - t);
  return a + diff * t;
}

}  // namespace

double skewness(std::span<const double> v) {
  const auto m = central_moments(v);
  if (m.m2 <= 0.0) return 0.0;
  return m.m3 / std::pow(m.m2, 1.5);
}

double excess_kurtosis(std::span<const double> v) {
  const auto m = central_moments(v);
  if (m.m2 <= 0.0) return 0.0;
  return m.m4 / (m.m2 * m.m2) - 3.0;
}

double quantile(std::span<const double> v, double q) {
  if (v.empty()) throw Error(Errc::InvalidArgument, "quantile of empty sequence");
  if (!(q >= 0.0 && q <= 1.0)) throw Error(Errc::InvalidArgument, "quantile level outside [0,1]");
  std::vector<double> s(v.begin(), v.end());
  std::sort(s.begin(), s.end());
  const double pos = q * static_cast<double>(s.size() - 1);
  const auto lo = static_cast<std::size_t>(std::floor(pos));
  if (lo + 1 >= s.size()) return s.back();
  return lerp(s[lo], s[lo + 1], pos - static_cast<double>(lo));
}

double percentile(std::span<const double> v, double pct) { return quantile(v, pct / 100.0); }

std::vector<double> gradient(std::span<const double> y, std::span<const double> x) {
  const std::size_t n = y.size();
  if (n != x.size()) throw Error(Errc::DimMismatch, "gradient: x and y sizes differ");
  if (n < 2) throw Error(Errc::TooFewPoints, "gradient needs at least two points");
  std::vector<double> out(n);
  std::vector<double> dx(n - 1);
  for (std::size_t i = 0; i + 1 < n; ++i) dx[i] = x[i + 1] - x[i];
  const bool uniform = std::all_of(dx.begin(), dx.end(), [&](double d) { return d == dx[0]; });
  if (uniform) {
    for (std::size_t i = 1; i + 1 < n; ++i) out[i] = (y[i + 1] - y[i - 1]) / (2.0 * dx[0]);
  } else {
    for (std::size_t i = 1; i + 1 < n; ++i) {
      const double hs = dx[i - 1];
      const double hd = dx[i];
      const double a = -hd / (hs * (hd + hs));
      const double b = (hd - hs) / (hd * hs);
      const double c = hs / (hd * (hd + hs));
      out[i] = a * y[i - 1] + b * y[i] + c * y[i + 1];
    }
  }
  out[0] = (y[1] - y[0]) / dx[0];
  out[n - 1] = (y[n - 1] - y[n - 2]) / dx[n - 2];
  return out;
}

std::vector<double> average_ranks(std::span<const double> v) {
  const std::size_t n = v.size();
  std::vector<std::size_t> idx(n);
  std::iota(idx.begin(), idx.end(), 0);
  std::stable_sort(idx.begin(), idx.end(), [&](std::size_t a, std::size_t b) { return v[a] < v[b]; });
  std::vector<double> r(n);
  std::size_t i = 0;
  while (i < n) {
    std::size_t j = i;
    while (j + 1 < n && v[idx[j + 1]] == v[idx[i]]) ++j;
    const double avg = 0.5 * static_cast<double>(i + j) + 1.0;
    for (std::size_t k = i; k <= j; ++k) r[idx[k]] = avg;
    i = j + 1;
  }
  return r;
}

RootResult find_root(const std::function<double(double)>& f, double lo, double hi, double xtol,
                     int max_iter) {
  RootResult res;
  const double flo = f(lo);
  const double fhi = f(hi);
  if (flo == 0.0) return {lo, true, 0};
  if (fhi == 0.0) return {hi, true, 0};
  if (!std::isfinite(flo) || !std::isfinite(fhi) || (flo > 0) == (fhi > 0)) return res;
  boost::uintmax_t iters = static_cast<boost::uintmax_t>(max_iter);
  try {
    auto tol = [xtol](double a, double b) { return std::fabs(b - a) <= xtol; };
    auto [a, b] = boost::math::tools::toms748_solve(f, lo, hi, flo, fhi, tol, iters);
    res.x = 0.5 * (a + b);
    res.iterations = static_cast<int>(iters);
    res.converged = std::fabs(b - a) <= xtol || f(res.x) == 0.0;
  } catch (const std::exception&) {
    res.converged = false;
  }
  return res;
}

namespace {

struct GslErrorHandlerGuard {
  gsl_error_handler_t* prev;
  GslErrorHandlerGuard() : prev(gsl_set_error_handler_off()) {}
  ~GslErrorHandlerGuard() { gsl_set_error_handler(prev); }
};

struct VectorDeleter {
  void operator()(gsl_vector* v) const { gsl_vector_free(v); }
};
using VectorPtr = std::unique_ptr<gsl_vector, VectorDeleter>;

VectorPtr make_vector(const std::vector<double>& v) {
  VectorPtr out(gsl_vector_alloc(v.size()));
  for (std::size_t i = 0; i < v.size(); ++i) gsl_vector_set(out.get(), i, v[i]);
  return out;
}

std::vector<double> to_std(const gsl_vector* v) {
  std::vector<double> out(v->size);
  for (std::size_t i = 0; i < v->size; ++i) out[i] = gsl_vector_get(v, i);
  return out;
}

using FdfFn = std::function<double(std::span<const double>, std::span<double>)>;

double gsl_f_trampoline(const gsl_vector* x, void* params) {
  const auto& f = *static_cast<const std::function<double(std::span<const double>)>*>(params);
  const double v = f(std::span<const double>(x->data, x->size));
  return std::isfinite(v) ? v : GSL_POSINF;
}

double fdf_f(const gsl_vector* x, void* params) {
  const auto& f = *static_cast<const FdfFn*>(params);
  std::vector<double> g(x->size);
  const double v = f(std::span<const double>(x->data, x->size), g);
  return std::isfinite(v) ? v : GSL_POSINF;
}

void fdf_df(const gsl_vector* x, void* params, gsl_vector* df) {
  const auto& f = *static_cast<const FdfFn*>(params);
  f(std::span<const double>(x->data, x->size), std::span<double>(df->data, df->size));
}

void fdf_fdf(const gsl_vector* x, void* params, double* fval, gsl_vector* df) {
  const auto& f = *static_cast<const FdfFn*>(params);
  *fval = f(std::span<const double>(x->data, x->size), std::span<double>(df->data, df->size));
  if (!std::isfinite(*fval)) *fval = GSL_POSINF;
}

}  // namespace

MinimizeResult minimize_simplex(const std::function<double(std::span<const double>)>& f,
                                std::vector<double> x0, std::vector<double> step, int max_iter,
                                double size_tol) {
  GslErrorHandlerGuard guard;
  const std::size_t n = x0.size();
  if (n == 0 || step.size() != n) throw Error(Errc::DimMismatch, "minimize_simplex: bad dimensions");
  gsl_multimin_function fn{&gsl_f_trampoline, n, const_cast<void*>(static_cast<const void*>(&f))};
  auto x = make_vector(x0);
  auto ss = make_vector(step);
  std::unique_ptr<gsl_multimin_fminimizer, decltype(&gsl_multimin_fminimizer_free)> s(
      gsl_multimin_fminimizer_alloc(gsl_multimin_fminimizer_nmsimplex2, n),
      &gsl_multimin_fminimizer_free);
  MinimizeResult res;
  if (gsl_multimin_fminimizer_set(s.get(), &fn, x.get(), ss.get()) != GSL_SUCCESS) {
    res.x = x0;
    res.value = f(x0);
    return res;
  }
  int iter = 0;
  int status = GSL_CONTINUE;
  while (status == GSL_CONTINUE && iter < max_iter) {
    ++iter;
    if (gsl_multimin_fminimizer_iterate(s.get()) != GSL_SUCCESS) break;
    status = gsl_multimin_test_size(gsl_multimin_fminimizer_size(s.get()), size_tol);
  }
  res.x = to_std(s->x);
  res.value = s->fval;
  res.iterations = iter;
  res.converged = status == GSL_SUCCESS;
  return res;
}

MinimizeResult minimize_bfgs(const FdfFn& fdf, std::vector<double> x0, int max_iter, double grad_tol) {
  GslErrorHandlerGuard guard;
  const std::size_t n = x0.size();
  if (n == 0) throw Error(Errc::DimMismatch, "minimize_bfgs: empty parameter vector");
  gsl_multimin_function_fdf fn;
  fn.n = n;
  fn.f = &fdf_f;
  fn.df = &fdf_df;
  fn.fdf = &fdf_fdf;
  fn.params = const_cast<void*>(static_cast<const void*>(&fdf));
  auto x = make_vector(x0);
  std::unique_ptr<gsl_multimin_fdfminimizer, decltype(&gsl_multimin_fdfminimizer_free)> s(
      gsl_multimin_fdfminimizer_alloc(gsl_multimin_fdfminimizer_vector_bfgs2, n),
      &gsl_multimin_fdfminimizer_free);
  MinimizeResult res;
  gsl_multimin_fdfminimizer_set(s.get(), &fn, x.get(), 0.01, 0.1);
  int iter = 0;
  int status = GSL_CONTINUE;
  while (status == GSL_CONTINUE && iter < max_iter) {
    ++iter;
    if (gsl_multimin_fdfminimizer_iterate(s.get()) != GSL_SUCCESS) break;
    status = gsl_multimin_test_gradient(s->gradient, grad_tol);
  }
  res.x = to_std(s->x);
  res.value = s->f;
  res.iterations = iter;
  res.converged = status == GSL_SUCCESS;
  return res;
}

Pchip::Pchip(std::vector<double> x, std::vector<double> y) : x_(std::move(x)), y_(std::move(y)) {
  const std::size_t n = x_.size();
  if (n != y_.size()) throw Error(Errc::DimMismatch, "Pchip: x and y sizes differ");
  if (n < 2) throw Error(Errc::TooFewPoints, "Pchip needs at least two knots");
  for (std::size_t i = 0; i + 1 < n; ++i)
    if (!(x_[i + 1] > x_[i])) throw Error(Errc::InvalidArgument, "Pchip knots must be strictly increasing");
  std::vector<double> h(n - 1), m(n - 1);
  for (std::size_t i = 0; i + 1 < n; ++i) {
    h[i] = x_[i + 1] - x_[i];
    m[i] = (y_[i + 1] - y_[i]) / h[i];
  }
  d_.assign(n, 0.0);
  if (n == 2) {
    d_[0] = d_[1] = m[0];
    return;
  }
  for (std::size_t k = 1; k + 1 < n; ++k) {
    const double a = m[k - 1], b = m[k];
    if (a == 0.0 || b == 0.0 || (a > 0) != (b > 0)) continue;
    const double w1 = 2.0 * h[k] + h[k - 1];
    const double w2 = h[k] + 2.0 * h[k - 1];
    d_[k] = (w1 + w2) / (w1 / a + w2 / b);
  }
  auto edge = [](double h0, double h1, double m0, double m1) {
    double d = ((2.0 * h0 + h1) * m0 - h0 * m1) / (h0 + h1);
    if ((d > 0) != (m0 > 0) || m0 == 0.0) return 0.0;
    if ((m0 > 0) != (m1 > 0) && std::fabs(d) > 3.0 * std::fabs(m0)) return 3.0 * m0;
    return d;
  };
  d_[0] = edge(h[0], h[1], m[0], m[1]);
  d_[n - 1] = edge(h[n - 2], h[n - 3], m[n - 2], m[n - 3]);
}

std::size_t Pchip::segment(double t) const {
  const auto it = std::upper_bound(x_.begin(), x_.end(), t);
  std::size_t i = it == x_.begin() ? 0 : static_cast<std::size_t>(it - x_.begin()) - 1;
  return std::min(i, x_.size() - 2);
}

double Pchip::value(double t) const {
  if (t <= x_.front()) return y_.front() + d_.front() * (t - x_.front());
  if (t >= x_.back()) return y_.back() + d_.back() * (t - x_.back());
  const std::size_t i = segment(t);
  const double h = x_[i + 1] - x_[i];
  const double s = (t - x_[i]) / h;
  const double s2 = s * s, s3 = s2 * s;
  const double h00 = 2 * s3 - 3 * s2 + 1;
  const double h10 = s3 - 2 * s2 + s;
  const double h01 = -2 * s3 + 3 * s2;
  const double h11 = s3 - s2;
  return h00 * y_[i] + h10 * h * d_[i] + h01 * y_[i + 1] + h11 * h * d_[i + 1];
}

double Pchip::derivative(double t) const {
  if (t <= x_.front()) return d_.front();
  if (t >= x_.back()) return d_.back();
  const std::size_t i = segment(t);
  const double h = x_[i + 1] - x_[i];
  const double s = (t - x_[i]) / h;
  const double s2 = s * s;
  const double dh00 = (6 * s2 - 6 * s) / h;
  const double dh10 = 3 * s2 - 4 * s + 1;
  const double dh01 = (-6 * s2 + 6 * s) / h;
  const double dh11 = 3 * s2 - 2 * s;
  return dh00 * y_[i] + dh10 * d_[i] + dh01 * y_[i + 1] + dh11 * d_[i + 1];
}

}  // namespace meritcurve
