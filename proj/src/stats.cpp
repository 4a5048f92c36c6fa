#include "emoreg/stats.hpp"

#include <algorithm>
#include <boost/math/distributions/fisher_f.hpp>
#include <boost/math/distributions/students_t.hpp>
#include <cmath>
#include <limits>

#include "emoreg/error.hpp"

namespace emoreg::stats {

double mean(std::span<const double> x) {
  if (x.empty()) return 0.0;
  double s = 0.0;
  for (double v : x) s += v;
  return s / static_cast<double>(x.size());
}

double variance(std::span<const double> x, bool sample) {
  const std::size_t n = x.size();
  if (n == 0 || (sample && n < 2)) return 0.0;
  const double m = mean(x);
  double ss = 0.0;
  for (double v : x) ss += (v - m) * (v - m);
  return ss / static_cast<double>(sample ? n - 1 : n);
}

double stddev(std::span<const double> x, bool sample) { return std::sqrt(variance(x, sample)); }

double median(std::vector<double> x) {
  if (x.empty()) throw Error(ErrorCode::insufficient_data, "median of empty sequence");
  const std::size_t mid = x.size() / 2;
  std::nth_element(x.begin(), x.begin() + static_cast<std::ptrdiff_t>(mid), x.end());
  const double upper = x[mid];
  if (x.size() % 2 == 1) return upper;
  const double lower = *std::max_element(x.begin(), x.begin() + static_cast<std::ptrdiff_t>(mid));
  return 0.5 * (lower + upper);
}

double kurtosis(std::span<const double> x) {
  const double m = mean(x);
  double m2 = 0.0, m4 = 0.0;
  for (double v : x) {
    const double d2 = (v - m) * (v - m);
    m2 += d2;
    m4 += d2 * d2;
  }
  if (m2 <= 0.0) return 0.0;
  const double n = static_cast<double>(x.size());
  m2 /= n;
  m4 /= n;
  return m4 / (m2 * m2);
}

double pearson(std::span<const double> x, std::span<const double> y) {
  if (x.size() != y.size() || x.size() < 2) {
    throw Error(ErrorCode::insufficient_data, "pearson needs two equal-length series of length >= 2");
  }
  auto constant = [](std::span<const double> v) {
    return std::all_of(v.begin(), v.end(), [&](double a) { return a == v.front(); });
  };
  if (constant(x) || constant(y)) {
    throw Error(ErrorCode::undefined_correlation, "zero variance in correlation input");
  }
  const double mx = mean(x), my = mean(y);
  double sxy = 0.0, sxx = 0.0, syy = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    const double dx = x[i] - mx, dy = y[i] - my;
    sxy += dx * dy;
    sxx += dx * dx;
    syy += dy * dy;
  }
  if (sxx <= 0.0 || syy <= 0.0) {
    throw Error(ErrorCode::undefined_correlation, "zero variance in correlation input");
  }
  return std::clamp(sxy / std::sqrt(sxx * syy), -1.0, 1.0);
}

AnovaResult one_way_anova(const std::vector<std::vector<double>>& groups) {
  if (groups.size() < 2) throw Error(ErrorCode::insufficient_data, "anova needs >= 2 groups");
  std::size_t total = 0;
  double grand = 0.0;
  for (const auto& g : groups) {
    if (g.empty()) throw Error(ErrorCode::insufficient_data, "anova group is empty");
    total += g.size();
    for (double v : g) grand += v;
  }
  if (total <= groups.size()) {
    throw Error(ErrorCode::insufficient_data, "anova needs more observations than groups");
  }
  grand /= static_cast<double>(total);
  double ssb = 0.0, ssw = 0.0;
  for (const auto& g : groups) {
    const double m = mean(g);
    ssb += static_cast<double>(g.size()) * (m - grand) * (m - grand);
    for (double v : g) ssw += (v - m) * (v - m);
  }
  AnovaResult out;
  out.df_between = static_cast<double>(groups.size() - 1);
  out.df_within = static_cast<double>(total - groups.size());
  // Relative floor so rounding noise in identical groups reads as zero spread.
  const double scale = std::max(1.0, std::abs(grand)) * std::numeric_limits<double>::epsilon();
  if (ssb <= scale * scale * static_cast<double>(total)) {
    out.f = 0.0;
    out.p = 1.0;
    return out;
  }
  if (ssw <= 0.0) {
    out.f = std::numeric_limits<double>::infinity();
    out.p = 0.0;
    return out;
  }
  out.f = (ssb / out.df_between) / (ssw / out.df_within);
  boost::math::fisher_f dist(out.df_between, out.df_within);
  out.p = boost::math::cdf(boost::math::complement(dist, out.f));
  return out;
}

double welch_t_test_p(std::span<const double> a, std::span<const double> b) {
  if (a.size() < 2 || b.size() < 2) {
    throw Error(ErrorCode::insufficient_data, "t-test needs >= 2 observations per group");
  }
  const double va = variance(a, true) / static_cast<double>(a.size());
  const double vb = variance(b, true) / static_cast<double>(b.size());
  const double diff = mean(a) - mean(b);
  if (va + vb <= 0.0) return diff == 0.0 ? 1.0 : 0.0;
  const double t = diff / std::sqrt(va + vb);
  const double df = (va + vb) * (va + vb) /
                    (va * va / static_cast<double>(a.size() - 1) +
                     vb * vb / static_cast<double>(b.size() - 1));
  boost::math::students_t dist(df);
  return 2.0 * boost::math::cdf(boost::math::complement(dist, std::abs(t)));
}

}  // namespace emoreg::stats
