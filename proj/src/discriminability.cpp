#include "gdisc/discriminability.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <iomanip>
#include <limits>

namespace gdisc {
namespace {

constexpr double kScaleFloor = 1e-30;

Vector standard_normal(std::mt19937_64& rng, Eigen::Index n) {
  std::normal_distribution<double> normal(0.0, 1.0);
  Vector v(n);
  for (Eigen::Index i = 0; i < n; ++i) v(i) = normal(rng);
  return v;
}

bool is_member(double residual, double scale, double tol) { return residual <= tol * std::max(scale, kScaleFloor); }

/// Low-band residual of the bank-output difference, and its worst-case bound ||x - y|| * ||gains||.
struct BankDifference {
  Matrix hx, hy;
  double residual = 0;
  double scale = 0;
};

BankDifference bank_difference(const Split& split, const Gnn& model, const Domain& domain, const Vector& x,
                               const Vector& y) {
  detail::require_same_size(split.n(), domain.n(), "domain vs split");
  detail::require_same_size(domain.n(), x.size(), "signal x");
  detail::require_same_size(domain.n(), y.size(), "signal y");
  BankDifference out;
  out.hx = bank_forward(model, domain, x);
  out.hy = bank_forward(model, domain, y);
  out.residual = (split.v_low.transpose() * (out.hx - out.hy)).norm();
  const Matrix gains = bank_responses(model, domain.spectrum);
  const double gain_norm = gains.cwiseAbs().colwise().maxCoeff().norm();
  out.scale = (x - y).norm() * gain_norm;
  return out;
}

double high_band_peak(const Matrix& responses, int f, int k) {
  const auto n = responses.rows();
  return responses.col(f).tail(n - k).cwiseAbs().maxCoeff();
}

void require_zero_high(const Gnn& model, const Domain& domain, int k, int f, std::vector<std::string>& warnings,
                       const char* who) {
  const Matrix r = bank_responses(model, domain.spectrum);
  if (high_band_peak(r, f, k) > kZeroResponseTol) {
    throw InvalidConfiguration(std::string(who) + ": filter " + std::to_string(f) +
                               " has nonzero response above the cutoff");
  }
  if (std::holds_alternative<Bank>(model.bank)) {
    warnings.push_back(std::string(who) + ": FIR filter " + std::to_string(f) +
                       " is only numerically zero above the cutoff (|h| <= 1e-10)");
  }
}

TrialRecord make_record(int trial, const PairVerdict& v, double secant_dev) {
  return TrialRecord{trial, v.in_d_h, v.in_d_phi, v.residual_low_filter, v.residual_low_gnn, secant_dev};
}

}  // namespace

double SecantReport::max_active_deviation() const {
  double m = 0;
  for (const auto& f : filters)
    if (f.high_response_nonzero) m = std::max(m, f.max_deviation);
  return m;
}

bool SecantReport::any_active() const {
  return std::any_of(filters.begin(), filters.end(), [](const FilterSecants& f) { return f.high_response_nonzero; });
}

Membership in_nul_vk(const Split& split, const Vector& d, double tol) {
  detail::require_same_size(split.n(), d.size(), "in_nul_vk");
  Membership m;
  m.residual = (split.v_low.transpose() * d).norm();
  m.scale = d.norm();
  m.member = is_member(m.residual, m.scale, tol);
  return m;
}

Membership pair_in_d_h(const Split& split, const Gnn& model, const Domain& domain, const Vector& x,
                       const Vector& y, double tol) {
  const auto diff = bank_difference(split, model, domain, x, y);
  Membership m{is_member(diff.residual, diff.scale, tol), diff.residual, diff.scale};
  const Membership direct = in_nul_vk(split, x - y, tol);
  if (direct.member != m.member) {
    throw InternalInconsistency("pair_in_d_h: direct null-space test (residual " + std::to_string(direct.residual) +
                                ") disagrees with filter-bank test (residual " + std::to_string(m.residual) + ")");
  }
  return m;
}

PairVerdict pair_in_d_phi(const Split& split, const Gnn& model, const Domain& domain, const Vector& x,
                          const Vector& y, double tol) {
  const Membership h = pair_in_d_h(split, model, domain, x, y, tol);
  const auto diff = bank_difference(split, model, domain, x, y);
  const Matrix phi_diff = model.sigma.eval(diff.hx) - model.sigma.eval(diff.hy);

  PairVerdict v;
  v.in_d_h = h.member;
  v.residual_low_filter = h.residual;
  v.scale_filter = h.scale;
  v.residual_low_gnn = (split.v_low.transpose() * phi_diff).norm();
  v.scale_gnn = model.sigma.lipschitz_constant() * h.scale;
  v.in_d_phi = is_member(v.residual_low_gnn, v.scale_gnn, tol);
  v.tolerance_used = tol;
  return v;
}

SampledPair sample_pair_in_d_h(const Split& split, std::mt19937_64& rng, double scale) {
  if (split.v_high.cols() < 1) throw InvalidConfiguration("sample_pair_in_d_h: empty high band");
  SampledPair p;
  p.x = standard_normal(rng, split.n());
  p.delta = standard_normal(rng, split.v_high.cols()) * scale;
  p.y = p.x + split.v_high * p.delta;
  return p;
}

SampledPair sample_positive_regime_pair(const Split& split, const Gnn& model, const Domain& domain,
                                        std::mt19937_64& rng, double scale) {
  SampledPair p = sample_pair_in_d_h(split, rng, scale);
  const Matrix hx = bank_forward(model, domain, p.x);
  const Matrix hy = bank_forward(model, domain, p.y);
  const Matrix gains = bank_responses(model, domain.spectrum);
  const Vector v1 = domain.spectrum.eigenvectors.col(0);

  // Shifting both signals by c v_1 adds c h^f(lambda_1) v_1 to every output of filter f.
  double c = 0;
  for (Eigen::Index f = 0; f < hx.cols(); ++f) {
    for (Eigen::Index i = 0; i < hx.rows(); ++i) {
      const double lift = gains(0, f) * v1(i);
      if (!(lift > 0)) {
        throw InvalidConfiguration(
            "sample_positive_regime_pair: needs h^f(lambda_1) * v_1 entrywise positive for every filter");
      }
      c = std::max(c, -std::min(hx(i, f), hy(i, f)) / lift);
    }
  }
  c = 1.5 * c + 1.0;
  p.x += c * v1;
  p.y += c * v1;
  return p;
}

SecantReport secant_report(const Gnn& model, const Domain& domain, const Vector& x, const Vector& y, int cutoff_k) {
  if (cutoff_k <= 0 || cutoff_k >= domain.n()) throw InvalidConfiguration("secant_report: need 0 < k < n");
  const Matrix hx = bank_forward(model, domain, x);
  const Matrix hy = bank_forward(model, domain, y);
  const Matrix gains = bank_responses(model, domain.spectrum);

  SecantReport report;
  report.filters.resize(static_cast<std::size_t>(hx.cols()));
  for (Eigen::Index f = 0; f < hx.cols(); ++f) {
    FilterSecants& fs = report.filters[static_cast<std::size_t>(f)];
    fs.secants.resize(hx.rows());
    for (Eigen::Index i = 0; i < hx.rows(); ++i) {
      const double a = hx(i, f), b = hy(i, f);
      fs.secants(i) = std::abs(a - b) < 1e-12 ? model.sigma.derivative(a)
                                              : (model.sigma.eval(a) - model.sigma.eval(b)) / (a - b);
    }
    fs.max_deviation = (fs.secants.array() - fs.secants.mean()).abs().maxCoeff();
    fs.high_response_nonzero = high_band_peak(gains, static_cast<int>(f), cutoff_k) > kZeroResponseTol;
  }
  return report;
}

std::mt19937_64 trial_rng(std::uint64_t seed, std::uint64_t index) {
  std::seed_seq seq{static_cast<std::uint32_t>(seed), static_cast<std::uint32_t>(seed >> 32),
                    static_cast<std::uint32_t>(index), static_cast<std::uint32_t>(index >> 32)};
  return std::mt19937_64(seq);
}

Gnn make_verification_gnn(const Spectrum<double>& spec, int k, int num_filters, HighBand others, const Sigma& sigma,
                          std::mt19937_64& rng) {
  const int n = spec.n();
  if (k <= 0 || k >= n) throw InvalidConfiguration("make_verification_gnn: need 0 < k < n");
  if (num_filters < 1) throw InvalidConfiguration("make_verification_gnn: need at least one filter");
  std::uniform_real_distribution<double> gain(0.5, 1.5);
  auto draw = [&](Eigen::Index len) {
    Vector v(len);
    for (Eigen::Index i = 0; i < len; ++i) v(i) = gain(rng);
    return v;
  };

  Matrix responses = Matrix::Zero(n, num_filters);
  responses.col(0) = zero_high_response(spec, k, draw(k)).response;
  for (int f = 1; f < num_filters; ++f) {
    switch (others) {
      case HighBand::zero: responses.col(f) = zero_high_response(spec, k, draw(k)).response; break;
      case HighBand::constant:
        responses.col(f).head(k) = draw(k);
        responses.col(f).tail(n - k).setConstant(gain(rng));
        break;
      case HighBand::generic: responses.col(f) = draw(n); break;
    }
  }
  return Gnn{SpectralBank<double>(std::move(responses)), sigma};
}

Theorem1Report verify_theorem1(const Domain& domain, const Split& split, const Gnn& model, int trials,
                               std::uint64_t seed, double tol) {
  Theorem1Report report;
  require_zero_high(model, domain, split.k, 0, report.warnings, "verify_theorem1");
  report.trials = trials;
  for (int t = 0; t < trials; ++t) {
    auto rng = trial_rng(seed, static_cast<std::uint64_t>(t));
    Vector x, y;
    PairVerdict v;
    // rejection-sample until the difference carries low-frequency energy
    for (;;) {
      x = standard_normal(rng, split.n());
      y = standard_normal(rng, split.n());
      if (in_nul_vk(split, x - y, tol).member) continue;
      v = pair_in_d_phi(split, model, domain, x, y, tol);
      if (!v.in_d_h) break;
    }
    if (v.in_d_phi) ++report.counterexamples;
    const double dev = secant_report(model, domain, x, y, split.k).max_active_deviation();
    report.log.push_back(make_record(t, v, dev));
  }
  return report;
}

Theorem2Report verify_theorem2_forward(const Domain& domain, const Split& split, const Gnn& model, int trials,
                                       std::uint64_t seed, double tol, double secant_tol, PairSampler sampler) {
  Theorem2Report report;
  if (model.num_features() < 2) throw InvalidConfiguration("verify_theorem2_forward: needs at least two filters");
  require_zero_high(model, domain, split.k, 0, report.warnings, "verify_theorem2_forward");
  report.trials = trials;
  report.worst_margin_decades = std::numeric_limits<double>::infinity();
  for (int t = 0; t < trials; ++t) {
    auto rng = trial_rng(seed, static_cast<std::uint64_t>(t));
    const SampledPair p = sampler == PairSampler::positive_regime
                              ? sample_positive_regime_pair(split, model, domain, rng)
                              : sample_pair_in_d_h(split, rng);
    const PairVerdict v = pair_in_d_phi(split, model, domain, p.x, p.y, tol);
    if (!v.in_d_h) throw InternalInconsistency("verify_theorem2_forward: sampled pair fell outside D_H");
    const SecantReport secants = secant_report(model, domain, p.x, p.y, split.k);
    const double dev = secants.max_active_deviation();
    const bool constant = dev <= secant_tol;

    report.constant_secant += constant;
    report.in_d_phi += v.in_d_phi;
    report.agreements += (constant == v.in_d_phi);
    const double threshold = tol * std::max(v.scale_gnn, kScaleFloor);
    const double margin = std::abs(std::log10(std::max(v.residual_low_gnn, 1e-300) / threshold));
    report.worst_margin_decades = std::min(report.worst_margin_decades, margin);
    report.max_residual_ratio =
        std::max(report.max_residual_ratio, v.residual_low_gnn / std::max(v.scale_gnn, kScaleFloor));
    report.log.push_back(make_record(t, v, dev));
  }
  return report;
}

Corollary1Report verify_corollary1(const Domain& domain, const Split& split, const Gnn& model, int trials,
                                   std::uint64_t seed, double tol) {
  Corollary1Report report;
  for (int f = 0; f < model.num_features(); ++f) require_zero_high(model, domain, split.k, f, report.warnings,
                                                                   "verify_corollary1");
  report.trials = trials;
  for (int t = 0; t < trials; ++t) {
    auto rng = trial_rng(seed, static_cast<std::uint64_t>(t));
    Vector x, y;
    if (t % 2 == 0) {
      auto p = sample_pair_in_d_h(split, rng);
      x = std::move(p.x);
      y = std::move(p.y);
    } else {
      x = standard_normal(rng, split.n());
      y = standard_normal(rng, split.n());
    }
    const PairVerdict v = pair_in_d_phi(split, model, domain, x, y, tol);
    report.pairs_in_d_h += v.in_d_h;
    report.agreements += (v.in_d_h == v.in_d_phi);
    const double dev = secant_report(model, domain, x, y, split.k).max_active_deviation();
    report.log.push_back(make_record(t, v, dev));
  }
  return report;
}

double tanh_secant_offset(double x, double b, int branch) {
  const double slope0 = 1.0 - std::tanh(x) * std::tanh(x);
  if (!(b > 0 && b < slope0)) throw InvalidInput("tanh_secant_offset: need 0 < b < tanh'(x)");
  const double s = branch >= 0 ? 1.0 : -1.0;
  // Secant along the branch: slope0 at t -> 0, decays to 0 as t grows.
  auto excess = [&](double t) { return (std::tanh(x) - std::tanh(x - s * t)) / (s * t) - b; };
  double hi = 1.0;
  while (excess(hi) >= 0) hi *= 2.0;
  double lo = 0.0;
  for (int it = 0; it < 200 && hi - lo > 1e-15 * hi; ++it) {
    const double mid = 0.5 * (lo + hi);
    if (mid == lo || mid == hi) break;
    (excess(mid) >= 0 ? lo : hi) = mid;
  }
  return s * 0.5 * (lo + hi);
}

double overdetermined_residual(const Split& split, const Vector& eps) {
  detail::require_same_size(split.n(), eps.size(), "overdetermined_residual");
  const Matrix& a = split.v_high;
  const Vector delta = (a.transpose() * a).ldlt().solve(a.transpose() * eps);
  return (a * delta - eps).norm();
}

Corollary2Report verify_corollary2(const Domain& domain, const Split& split, const Gnn& model, int trials,
                                   std::uint64_t seed, double tol) {
  const int n = split.n();
  if (n - split.k <= 1) throw InvalidConfiguration("verify_corollary2: needs N - K > 1");
  if (model.sigma.kind() != SigmaKind::tanh) throw InvalidConfiguration("verify_corollary2: sigma must be tanh");
  const Matrix gains = bank_responses(model, domain.spectrum);
  int active = -1;
  for (int f = 0; f < gains.cols() && active < 0; ++f)
    if (high_band_peak(gains, f, split.k) > kZeroResponseTol) active = f;
  if (active < 0) throw InvalidConfiguration("verify_corollary2: no filter responds above the cutoff");

  Corollary2Report report;
  report.trials = trials;
  for (int t = 0; t < trials; ++t) {
    auto rng = trial_rng(seed, static_cast<std::uint64_t>(t));
    Vector x, y;
    if (t % 4 != 3) {
      auto p = sample_pair_in_d_h(split, rng);
      x = std::move(p.x);
      y = std::move(p.y);
    } else {
      x = standard_normal(rng, n);
      y = standard_normal(rng, n);
    }
    const PairVerdict v = pair_in_d_phi(split, model, domain, x, y, tol);
    if (v.in_d_phi && !v.in_d_h) ++report.subset_violations;
    if (v.in_d_h && !v.in_d_phi) {
      if (report.first_witness_trial < 0) report.first_witness_trial = t;
      ++report.strict_witnesses;
    }
    const double dev = secant_report(model, domain, x, y, split.k).max_active_deviation();
    report.log.push_back(make_record(t, v, dev));
  }

  // Constant-secant probe: a target secant b at every node fixes the per-node offsets
  // eps*(b); a constant-secant partner exists only if eps* lies in span(V_{N-K}).
  report.probe_draws = trials;
  for (int d = 0; d < trials; ++d) {
    auto rng = trial_rng(seed ^ 0x9e3779b97f4a7c15ULL, static_cast<std::uint64_t>(d));
    const Vector x = standard_normal(rng, n);
    const Vector xf = bank_forward(model, domain, x).col(active);
    double slope_floor = 1.0;
    for (Eigen::Index i = 0; i < n; ++i) slope_floor = std::min(slope_floor, 1.0 - std::pow(std::tanh(xf(i)), 2));
    std::uniform_real_distribution<double> frac(0.05, 0.95);
    std::bernoulli_distribution coin(0.5);
    const double b = slope_floor * frac(rng);
    Vector eps(n);
    for (Eigen::Index i = 0; i < n; ++i) eps(i) = tanh_secant_offset(xf(i), b, coin(rng) ? 1 : -1);
    const double r = overdetermined_residual(split, eps);
    report.probe_residuals.push_back(r);
    if (r > kProbeThreshold) ++report.probe_above_threshold;
  }
  return report;
}

void write_trial_csv(const std::vector<TrialRecord>& log, const std::string& path) {
  std::ofstream out(path);
  if (!out) throw IoError("cannot open " + path + " for writing");
  out << std::setprecision(17);
  out << "trial,in_d_h,in_d_phi,residual_low_filter,residual_low_gnn,max_secant_deviation\n";
  for (const auto& r : log) {
    out << r.trial << ',' << int(r.in_d_h) << ',' << int(r.in_d_phi) << ',' << r.residual_low_filter << ','
        << r.residual_low_gnn << ',' << r.max_secant_deviation << '\n';
  }
  if (!out) throw IoError("write to " + path + " failed");
}

}  // namespace gdisc
