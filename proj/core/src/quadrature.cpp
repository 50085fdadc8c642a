#include "cmkt/quadrature.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <numeric>
#include <queue>
#include <random>
#include <stdexcept>

#include <boost/math/quadrature/gauss.hpp>
#include <boost/math/quadrature/gauss_kronrod.hpp>

namespace cmkt {
namespace {

// 15-point Kronrod rule with its embedded 7-point Gauss rule, taken from
// Boost's tables. Node i >= 1 stands for the symmetric pair +-x_i.
struct KronrodTable {
  std::array<double, 8> x{};
  std::array<double, 8> wk{};
  std::array<double, 8> wg{};  // zero where the node is not a Gauss node
};

const KronrodTable& kronrod_table() {
  static const KronrodTable table = [] {
    using boost::math::quadrature::gauss;
    using boost::math::quadrature::gauss_kronrod;
    KronrodTable t;
    const auto& kx = gauss_kronrod<double, 15>::abscissa();
    const auto& kw = gauss_kronrod<double, 15>::weights();
    const auto& gx = gauss<double, 7>::abscissa();
    const auto& gw = gauss<double, 7>::weights();
    for (std::size_t i = 0; i < 8; ++i) {
      t.x[i] = kx[i];
      t.wk[i] = kw[i];
      for (std::size_t j = 0; j < gx.size(); ++j) {
        if (std::abs(gx[j] - kx[i]) < 1e-14) t.wg[i] = gw[j];
      }
    }
    return t;
  }();
  return table;
}

struct Interval {
  double a = 0.0;
  double b = 0.0;
  std::vector<double> value;
  double error = 0.0;
  double magnitude = 0.0;  // integral of |f|, max over components
};

constexpr double kRoundoff = 1e-10;

struct ByError {
  bool operator()(const Interval& l, const Interval& r) const { return l.error < r.error; }
};

class Evaluator {
 public:
  Evaluator(const VectorIntegrand1D& f, std::size_t width)
      : f_(f), width_(width), fk_(15 * width), left_(width), right_(width) {}

  Interval apply(double a, double b) {
    const KronrodTable& t = kronrod_table();
    const double c = 0.5 * (a + b);
    const double h = 0.5 * (b - a);
    Interval out{a, b, std::vector<double>(width_, 0.0), 0.0};
    std::vector<double> gauss(width_, 0.0);
    f_(c, std::span<double>(fk_.data(), width_));
    for (std::size_t i = 1; i < 8; ++i) {
      f_(c - h * t.x[i], std::span<double>(fk_.data() + (2 * i - 1) * width_, width_));
      f_(c + h * t.x[i], std::span<double>(fk_.data() + 2 * i * width_, width_));
    }
    evaluations_ += 15;
    double err = 0.0;
    out.magnitude = 0.0;
    for (std::size_t k = 0; k < width_; ++k) {
      double mag = t.wk[0] * std::abs(fk_[k]);
      for (std::size_t i = 1; i < 8; ++i)
        mag += t.wk[i] * (std::abs(fk_[(2 * i - 1) * width_ + k]) + std::abs(fk_[2 * i * width_ + k]));
      out.magnitude = std::max(out.magnitude, mag * h);
      double kr = t.wk[0] * fk_[k];
      double ga = t.wg[0] * fk_[k];
      for (std::size_t i = 1; i < 8; ++i) {
        const double pair = fk_[(2 * i - 1) * width_ + k] + fk_[2 * i * width_ + k];
        kr += t.wk[i] * pair;
        ga += t.wg[i] * pair;
      }
      out.value[k] = kr * h;
      gauss[k] = ga * h;
      err = std::max(err, std::abs(out.value[k] - gauss[k]));
    }
    // A jump between an endpoint and the outermost node is invisible to the
    // Kronrod/Gauss difference; compare the outermost nodes with one-sided
    // probes at the endpoints.
    const double probe = 1e-9 * (b - a);
    f_(a + probe, left_);
    f_(b - probe, right_);
    evaluations_ += 2;
    // Probes are compared with the linear extrapolation of the two outermost
    // nodes, so smooth integrands contribute nothing at first order.
    const double edge = h * (1.0 - t.x[7]);
    const double slope = (1.0 - t.x[7]) / (t.x[7] - t.x[6]);
    for (std::size_t k = 0; k < width_; ++k) {
      const double l7 = fk_[13 * width_ + k];
      const double l6 = fk_[11 * width_ + k];
      const double r7 = fk_[14 * width_ + k];
      const double r6 = fk_[12 * width_ + k];
      const double jl = std::abs(left_[k] - (l7 + (l7 - l6) * slope));
      const double jr = std::abs(right_[k] - (r7 + (r7 - r6) * slope));
      err = std::max(err, (jl + jr) * edge);
    }
    out.error = err;
    return out;
  }

  std::size_t evaluations() const { return evaluations_; }

 private:
  const VectorIntegrand1D& f_;
  std::size_t width_;
  std::vector<double> fk_;
  std::vector<double> left_;
  std::vector<double> right_;
  std::size_t evaluations_ = 0;
};

}  // namespace

QuadratureResult integrate_intervals(const VectorIntegrand1D& f, std::size_t width,
                                     std::span<const double> breaks,
                                     const QuadratureOptions& opts) {
  if (breaks.size() < 2) throw std::invalid_argument("need at least one interval");
  if (!(opts.abs_tol > 0.0)) throw std::invalid_argument("tolerance must be positive");
  Evaluator eval(f, width);
  std::priority_queue<Interval, std::vector<Interval>, ByError> heap;
  double total_err = 0.0;
  double total_mag = 0.0;
  for (std::size_t i = 0; i + 1 < breaks.size(); ++i) {
    if (!(breaks[i + 1] > breaks[i])) continue;
    Interval iv = eval.apply(breaks[i], breaks[i + 1]);
    total_err += iv.error;
    total_mag += iv.magnitude;
    heap.push(std::move(iv));
  }
  // Below kRoundoff * int |f| the error estimate is dominated by rounding.
  const auto target = [&] { return std::max(opts.abs_tol, kRoundoff * total_mag); };
  while (total_err > target() && heap.size() < opts.max_intervals && !heap.empty()) {
    Interval worst = heap.top();
    const double mid = 0.5 * (worst.a + worst.b);
    if (!(mid > worst.a && mid < worst.b) || (worst.b - worst.a) < 1e-15) break;
    heap.pop();
    Interval l = eval.apply(worst.a, mid);
    Interval r = eval.apply(mid, worst.b);
    total_err += l.error + r.error - worst.error;
    total_mag += l.magnitude + r.magnitude - worst.magnitude;
    heap.push(std::move(l));
    heap.push(std::move(r));
  }
  QuadratureResult res;
  res.value.assign(width, 0.0);
  // Sum in a fixed order (by left endpoint) for bit-stable output.
  std::vector<Interval> all;
  all.reserve(heap.size());
  double err = 0.0;
  while (!heap.empty()) {
    all.push_back(heap.top());
    heap.pop();
  }
  std::sort(all.begin(), all.end(), [](const Interval& l, const Interval& r) { return l.a < r.a; });
  for (const Interval& iv : all) {
    for (std::size_t k = 0; k < width; ++k) res.value[k] += iv.value[k];
    err += iv.error;
  }
  res.error = err;
  res.evaluations = eval.evaluations();
  return res;
}

double integrate_scalar(const std::function<double(double)>& f, double a, double b,
                        double abs_tol, double* error) {
  if (!(b > a)) {
    if (error) *error = 0.0;
    return 0.0;
  }
  const VectorIntegrand1D g = [&](double x, std::span<double> out) { out[0] = f(x); };
  const std::array<double, 2> br{a, b};
  QuadratureOptions opts;
  opts.abs_tol = abs_tol;
  const QuadratureResult r = integrate_intervals(g, 1, br, opts);
  if (error) *error = r.error;
  return r.value[0];
}

namespace {

struct Segment {
  double lo;
  double hi;
  std::size_t piece;
};

std::vector<Segment> u_segments(const UnitDistribution& d, std::span<const double> hints) {
  std::vector<Segment> out;
  for (std::size_t k = 0; k < d.piece_count(); ++k) {
    const double lo = d.mass_before(k);
    const double hi = d.mass_before(k + 1);
    if (!(hi > lo)) continue;
    std::vector<double> cuts{lo, hi};
    if (!std::holds_alternative<AtomPiece>(d.pieces()[k])) {
      for (double h : hints) {
        const double u = d.cdf(h);
        if (u > lo && u < hi) cuts.push_back(u);
      }
    }
    std::sort(cuts.begin(), cuts.end());
    cuts.erase(std::unique(cuts.begin(), cuts.end()), cuts.end());
    for (std::size_t i = 0; i + 1 < cuts.size(); ++i) out.push_back({cuts[i], cuts[i + 1], k});
  }
  return out;
}

QuadratureResult expect_rec(std::span<const UnitDistribution* const> dims, std::size_t depth,
                            std::vector<double>& x, const VectorIntegrandND& f,
                            std::size_t width, double tol, std::size_t max_intervals,
                            std::span<const double> hints) {
  if (depth == dims.size()) {
    QuadratureResult r;
    r.value.assign(width, 0.0);
    f(x, r.value);
    r.evaluations = 1;
    return r;
  }
  const UnitDistribution& d = *dims[depth];
  const bool last = depth + 1 == dims.size();
  const double outer_tol = last ? tol : 0.5 * tol;
  const double inner_tol = 0.5 * tol;
  QuadratureResult total;
  total.value.assign(width, 0.0);
  double inner_err_max = 0.0;
  for (const Segment& s : u_segments(d, hints)) {
    const auto& piece = d.pieces()[s.piece];
    if (std::holds_alternative<AtomPiece>(piece)) {
      x[depth] = std::get<AtomPiece>(piece).x;
      QuadratureResult inner = expect_rec(dims, depth + 1, x, f, width, inner_tol, max_intervals, hints);
      const double w = s.hi - s.lo;
      for (std::size_t k = 0; k < width; ++k) total.value[k] += w * inner.value[k];
      total.error += w * inner.error;
      total.evaluations += inner.evaluations;
      continue;
    }
    const VectorIntegrand1D g = [&](double u, std::span<double> out) {
      x[depth] = d.quantile_in_piece(s.piece, u);
      QuadratureResult inner = expect_rec(dims, depth + 1, x, f, width, inner_tol, max_intervals, hints);
      std::copy(inner.value.begin(), inner.value.end(), out.begin());
      inner_err_max = std::max(inner_err_max, inner.error);
      total.evaluations += inner.evaluations;
    };
    const std::array<double, 2> br{s.lo, s.hi};
    QuadratureOptions o;
    o.abs_tol = outer_tol * (s.hi - s.lo);
    o.max_intervals = max_intervals;
    const QuadratureResult r = integrate_intervals(g, width, br, o);
    for (std::size_t k = 0; k < width; ++k) total.value[k] += r.value[k];
    total.error += r.error;
  }
  total.error += inner_err_max;
  return total;
}

}  // namespace

QuadratureResult expect_over(std::span<const UnitDistribution* const> dims,
                             const VectorIntegrandND& f, std::size_t width,
                             const QuadratureOptions& opts, std::span<const double> hints) {
  if (!(opts.abs_tol > 0.0)) throw std::invalid_argument("tolerance must be positive");
  std::vector<double> x(dims.size(), 0.0);
  return expect_rec(dims, 0, x, f, width, opts.abs_tol, opts.max_intervals, hints);
}

namespace {

// Stratified u-values for one dimension and their weights (summing to 1).
void stratify(const UnitDistribution& d, std::size_t n, std::size_t min_per_piece,
              std::mt19937_64& rng, std::vector<double>& xs, std::vector<double>& ws) {
  xs.clear();
  ws.clear();
  const std::size_t pieces = d.piece_count();
  std::vector<std::size_t> counts(pieces, 0);
  std::size_t used = 0;
  std::size_t biggest = 0;
  for (std::size_t k = 0; k < pieces; ++k) {
    const double mass = d.piece_mass(k);
    if (!(mass > 0.0)) continue;
    counts[k] = std::max<std::size_t>(min_per_piece,
                                      static_cast<std::size_t>(std::floor(mass * static_cast<double>(n))));
    used += counts[k];
    if (d.piece_mass(k) > d.piece_mass(biggest)) biggest = k;
  }
  if (used > n) {
    const std::size_t excess = used - n;
    if (counts[biggest] <= excess + min_per_piece) {
      throw std::invalid_argument("too few Monte Carlo samples for the stratification");
    }
    counts[biggest] -= excess;
  } else {
    counts[biggest] += n - used;
  }
  std::uniform_real_distribution<double> unif(0.0, 1.0);
  for (std::size_t k = 0; k < pieces; ++k) {
    if (counts[k] == 0) continue;
    const double lo = d.mass_before(k);
    const double mass = d.piece_mass(k);
    const double w = mass / static_cast<double>(counts[k]);
    for (std::size_t j = 0; j < counts[k]; ++j) {
      const double u = lo + mass * (static_cast<double>(j) + unif(rng)) / static_cast<double>(counts[k]);
      xs.push_back(d.quantile_in_piece(k, std::min(u, lo + mass)));
      ws.push_back(w);
    }
  }
}

}  // namespace

MonteCarloResult stratified_monte_carlo(std::span<const UnitDistribution* const> dims,
                                        const VectorIntegrandND& f, std::size_t width,
                                        const MonteCarloOptions& opts) {
  if (opts.replicates < 2) throw std::invalid_argument("need at least two replicates");
  const std::size_t n = opts.samples / opts.replicates;
  if (n == 0) throw std::invalid_argument("too few samples");
  const std::size_t dcount = dims.size();
  std::vector<std::vector<double>> rep_means(opts.replicates, std::vector<double>(width, 0.0));
  std::vector<double> x(dcount);
  std::vector<double> out(width);
  std::vector<std::vector<double>> xs(dcount), ws(dcount);
  std::vector<std::vector<std::size_t>> perm(dcount);
  for (std::size_t r = 0; r < opts.replicates; ++r) {
    std::mt19937_64 rng(derive_seed(opts.seed, r));
    for (std::size_t d = 0; d < dcount; ++d) {
      stratify(*dims[d], n, opts.min_per_piece, rng, xs[d], ws[d]);
      perm[d].resize(n);
      std::iota(perm[d].begin(), perm[d].end(), std::size_t{0});
      if (d > 0) std::shuffle(perm[d].begin(), perm[d].end(), rng);
    }
    const double scale = std::pow(static_cast<double>(n), static_cast<double>(dcount) - 1.0);
    std::vector<double>& acc = rep_means[r];
    const std::size_t points = dcount == 0 ? 1 : n;
    for (std::size_t i = 0; i < points; ++i) {
      double w = dcount == 0 ? 1.0 : scale;
      for (std::size_t d = 0; d < dcount; ++d) {
        x[d] = xs[d][perm[d][i]];
        w *= ws[d][perm[d][i]];
      }
      std::fill(out.begin(), out.end(), 0.0);
      f(x, out);
      for (std::size_t k = 0; k < width; ++k) acc[k] += w * out[k];
    }
  }
  MonteCarloResult res;
  res.mean.assign(width, 0.0);
  res.std_error.assign(width, 0.0);
  res.samples = n * opts.replicates;
  const double R = static_cast<double>(opts.replicates);
  for (std::size_t k = 0; k < width; ++k) {
    double mean = 0.0;
    for (const auto& m : rep_means) mean += m[k];
    mean /= R;
    double var = 0.0;
    for (const auto& m : rep_means) var += (m[k] - mean) * (m[k] - mean);
    var /= (R - 1.0);
    res.mean[k] = mean;
    res.std_error[k] = std::sqrt(var / R);
  }
  return res;
}

}  // namespace cmkt
