#pragma once

#include <array>
#include <cstdint>
#include <filesystem>
#include <functional>
#include <string>
#include <vector>

#include "aesust/aessa.hpp"

namespace aesust {

struct CheckResult {
  std::string name;
  bool passed = false;
  std::string detail;
  double seconds = 0;
};

// Tolerances of the acceptance suite.
inline constexpr double kRowSumTolerance = 1e-5;
inline constexpr double kOracleTolerance = 1e-6;
inline constexpr double kGradientRelTolerance = 1e-3;
inline constexpr double kFiniteDifferenceStep = 1e-5;
// Denominator floor: entries whose true gradient is ~0 are judged on absolute error.
inline constexpr double kGradientErrorFloor = 1e-5;
inline constexpr double kMultiscaleTolerance = 1e-6;
inline constexpr double kColorMeanTolerance = 1e-4;
inline constexpr double kLossTolerance = 1e-9;
inline constexpr double kDeskObjectiveReduction = 0.5;
inline constexpr double kDeskWallSeconds = 900;

/// Largest |row sum − 1| or negative entry over the last two dims of `attention`.
double row_stochastic_violation(const Tensor<double>& attention);

/// Produces {A_a, A_s} for one (F_c, F_s, F_a) triple.
using AttentionProbe = std::function<std::array<Tensor<double>, 2>(
    const Var<double>& content, const Var<double>& style, const Var<double>& aesthetic, const AesSAParams<double>& params)>;
/// The probe over the real module.
AttentionProbe module_attention_probe();

struct GradientReport {
  std::string name;
  double max_rel_error = 0;
  Index checked = 0;
};

/// Central differences of `loss` against each listed tensor; at most `max_entries`
/// entries per tensor, sampled without replacement. Error per entry is
/// |a − n| / max(|a|, |n|, kGradientErrorFloor).
std::vector<GradientReport> finite_difference_check(const std::function<Var<double>()>& loss,
                                                    const ParameterList<double>& wrt, Index max_entries,
                                                    std::uint64_t seed, double step = kFiniteDifferenceStep);

CheckResult check_attention_stochasticity(int triples = 100, std::uint64_t seed = 1,
                                          const AttentionProbe& probe = module_attention_probe());
CheckResult check_oracle_equivalence(std::uint64_t seed = 2);
CheckResult check_gradients(std::uint64_t seed = 3);
CheckResult check_residual_identities(std::uint64_t seed = 4);
CheckResult check_multiscale_features(std::uint64_t seed = 5);
CheckResult check_loss_sanity();
CheckResult check_stage_gating(std::uint64_t seed = 6);

struct DeskRunOptions {
  std::filesystem::path workdir;  // corpus and checkpoints are written here
  long long stage1_steps = 500;
  long long stage2_steps = 500;
  long long window = 50;          // trailing steps averaged for the final objective
};
CheckResult check_desk_training(const DeskRunOptions& options);
CheckResult check_controls(std::uint64_t seed = 8);
CheckResult check_persistence(int cases = 1000, std::uint64_t seed = 9);

/// Every check above in order; `on_result` sees each result as it completes.
std::vector<CheckResult> run_selfcheck(const std::filesystem::path& workdir,
                                       const std::function<void(const CheckResult&)>& on_result = {});

}  // namespace aesust
