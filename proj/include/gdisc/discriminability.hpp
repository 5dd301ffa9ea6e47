#pragma once

#include <cstdint>
#include <random>
#include <string>
#include <utility>
#include <vector>

#include "gdisc/filtering.hpp"
#include "gdisc/gnn.hpp"
#include "gdisc/spectral.hpp"

namespace gdisc {

inline constexpr double kMembershipTol = 1e-8;
inline constexpr double kSecantTol = 1e-9;
/// Gains at or below this magnitude count as an exactly zero response.
inline constexpr double kZeroResponseTol = 1e-10;

/// Outcome of a null-space membership test: residual <= tol * scale.
struct Membership {
  bool member = false;
  double residual = 0;
  double scale = 0;
};

/// Evidence for (x, y) membership in the filter-bank and GNN nondiscriminable sets.
struct PairVerdict {
  bool in_d_h = false;
  bool in_d_phi = false;
  double residual_low_filter = 0;  // ||V_K^T (H(x) - H(y))||_F over all filters
  double residual_low_gnn = 0;     // ||V_K^T (Phi(x) - Phi(y))||_F over all features
  double scale_filter = 0;
  double scale_gnn = 0;
  double tolerance_used = 0;
};

struct FilterSecants {
  Vector secants;  // b_i^f
  double max_deviation = 0;
  bool high_response_nonzero = false;
};

struct SecantReport {
  std::vector<FilterSecants> filters;

  /// Largest secant deviation among filters with nonzero response above the cutoff.
  double max_active_deviation() const;
  bool any_active() const;
};

/// One verifier trial; also the row layout of the verification CSV.
struct TrialRecord {
  int trial = 0;
  bool in_d_h = false;
  bool in_d_phi = false;
  double residual_low_filter = 0;
  double residual_low_gnn = 0;
  double max_secant_deviation = 0;
};

/// Membership of d in Nul(V_K^T): ||V_K^T d|| <= tol * max(||d||, 1e-30).
Membership in_nul_vk(const Split& split, const Vector& d, double tol = kMembershipTol);

/// Membership test on the filter-bank outputs. Cross-checks against the direct
/// null-space test on x - y and throws InternalInconsistency if the two disagree.
Membership pair_in_d_h(const Split& split, const Gnn& model, const Domain& domain, const Vector& x,
                       const Vector& y, double tol = kMembershipTol);

PairVerdict pair_in_d_phi(const Split& split, const Gnn& model, const Domain& domain, const Vector& x,
                          const Vector& y, double tol = kMembershipTol);

/// x standard normal, y = x + V_{N-K} delta with delta standard normal times `scale`.
struct SampledPair {
  Vector x;
  Vector y;
  Vector delta;
};
SampledPair sample_pair_in_d_h(const Split& split, std::mt19937_64& rng, double scale = 1.0);

/// Pair in D_H shifted along v_1 far enough that every filter output of both signals is
/// strictly positive. Needs v_1 entrywise positive and h^f(lambda_1) > 0 for all f.
SampledPair sample_positive_regime_pair(const Split& split, const Gnn& model, const Domain& domain,
                                        std::mt19937_64& rng, double scale = 1.0);

SecantReport secant_report(const Gnn& model, const Domain& domain, const Vector& x, const Vector& y,
                           int cutoff_k);

/// Independent per-trial RNG stream derived from a master seed.
std::mt19937_64 trial_rng(std::uint64_t seed, std::uint64_t index);

enum class HighBand { zero, constant, generic };

/// Spectral-filter GNN for theorem checks. Filter 0 is exactly zero above index k; the
/// remaining F-1 filters follow `others`. All nonzero gains are drawn from [0.5, 1.5].
Gnn make_verification_gnn(const Spectrum<double>& spec, int k, int num_filters, HighBand others,
                          const Sigma& sigma, std::mt19937_64& rng);

struct Theorem1Report {
  int trials = 0;
  int counterexamples = 0;
  std::vector<TrialRecord> log;
  std::vector<std::string> warnings;
};

/// Samples pairs outside D_H and counts those that land in D_Phi.
Theorem1Report verify_theorem1(const Domain& domain, const Split& split, const Gnn& model, int trials,
                               std::uint64_t seed, double tol = kMembershipTol);

enum class PairSampler { random_in_d_h, positive_regime };

struct Theorem2Report {
  int trials = 0;
  int agreements = 0;       // constant-secant verdict == D_Phi verdict
  int constant_secant = 0;
  int in_d_phi = 0;
  double worst_margin_decades = 0;  // min |log10(residual / threshold)| over trials
  double max_residual_ratio = 0;    // max residual_low_gnn / scale_gnn
  std::vector<TrialRecord> log;
  std::vector<std::string> warnings;

  double agreement_rate() const { return trials ? double(agreements) / trials : 1.0; }
};

/// Checks the constant-secant characterisation of D_Phi on pairs drawn from D_H.
Theorem2Report verify_theorem2_forward(const Domain& domain, const Split& split, const Gnn& model, int trials,
                                       std::uint64_t seed, double tol = kMembershipTol,
                                       double secant_tol = kSecantTol,
                                       PairSampler sampler = PairSampler::random_in_d_h);

struct Corollary1Report {
  int trials = 0;
  int agreements = 0;
  int pairs_in_d_h = 0;
  std::vector<TrialRecord> log;
  std::vector<std::string> warnings;
};

/// With every filter zero above the cutoff, D_H and D_Phi verdicts must coincide.
/// Even trials draw pairs from D_H, odd trials draw unrelated pairs.
Corollary1Report verify_corollary1(const Domain& domain, const Split& split, const Gnn& model, int trials,
                                   std::uint64_t seed, double tol = kMembershipTol);

struct Corollary2Report {
  int trials = 0;
  int subset_violations = 0;  // in D_Phi but not in D_H
  int strict_witnesses = 0;   // in D_H but not in D_Phi
  int first_witness_trial = -1;
  int probe_draws = 0;
  int probe_above_threshold = 0;  // residual > kProbeThreshold
  std::vector<double> probe_residuals;
  std::vector<TrialRecord> log;
  std::vector<std::string> warnings;

  bool witness_found() const { return strict_witnesses > 0; }
  double probe_fraction() const { return probe_draws ? double(probe_above_threshold) / probe_draws : 0.0; }
};

inline constexpr double kProbeThreshold = 1e-6;

/// Offset e != 0 solving tanh(x) - tanh(x - e) = b e on the branch sign(e) == branch.
/// Requires 0 < b < 1 - tanh(x)^2.
double tanh_secant_offset(double x, double b, int branch);

/// Least-squares residual of V_{N-K} delta = eps, solved through the normal equations.
double overdetermined_residual(const Split& split, const Vector& eps);

/// Subset direction, strictness witness and the overdetermined-system probe for tanh GNNs.
Corollary2Report verify_corollary2(const Domain& domain, const Split& split, const Gnn& model, int trials,
                                   std::uint64_t seed, double tol = kMembershipTol);

void write_trial_csv(const std::vector<TrialRecord>& log, const std::string& path);

}  // namespace gdisc
