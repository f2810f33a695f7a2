// One PASS/FAIL line per acceptance criterion; exit status 0 only if all pass.
#include <sys/wait.h>
#include <unistd.h>

#include <cstdio>
#include <filesystem>
#include <iostream>
#include <string>

#include "aesust/checks.hpp"

using namespace aesust;
namespace fs = std::filesystem;

namespace {

constexpr double kGradientSuiteSeconds = 60;

int failures = 0;

void report(const std::string& criterion, bool passed, const std::string& detail) {
  if (!passed) ++failures;
  std::cout << (passed ? "PASS " : "FAIL ") << criterion << " | " << detail << std::endl;
}

void report(const std::string& criterion, const CheckResult& r) { report(criterion, r.passed, r.detail); }

}  // namespace

int main() {
  const fs::path work = fs::temp_directory_path() / ("aesust-acceptance-" + std::to_string(::getpid()));
  fs::create_directories(work);

  report("attention stochasticity (100 triples, rows sum to 1 within 1e-5, nonnegative)",
         check_attention_stochasticity(100));
  report("oracle equivalence (C<=4, H,W<=3, within 1e-6)", check_oracle_equivalence());

  const CheckResult grad = check_gradients();
  report("gradient suite (f64, h=1e-5, rel err < 1e-3, under 60 s)", grad.passed && grad.seconds < kGradientSuiteSeconds,
         grad.detail + ", " + std::to_string(grad.seconds) + " s");

  report("residual identities (zeroed output convs pass through exactly)", check_residual_identities());
  report("multi-scale aesthetic features (within 1e-6, 512 x H/16 x W/16 at full widths)", check_multiscale_features());
  report("loss sanity (fixed points, 2 log 2, totals 57 / 507.5)", check_loss_sanity());
  report("stage gating (stage I vs stage II term sets)", check_stage_gating());
  report("desk-scale training (>=50% objective drop, identity MSE drop, finite stage II, < 15 min)",
         check_desk_training({work / "desk"}));
  report("controls algebra (bit-exact identities, color means within 1e-4)", check_controls());
  report("persistence (1000-case round-trip fuzz, stage-2 loads stage-1 tensors by name)", check_persistence(1000));

  {
    const std::string cmd = std::string(AESUST_CLI_PATH) + " selfcheck --workdir '" + (work / "selfcheck").string() + "' 2>&1";
    FILE* pipe = ::popen(cmd.c_str(), "r");
    std::string out;
    if (pipe) {
      char buf[4096];
      while (std::size_t n = std::fread(buf, 1, sizeof buf, pipe)) out.append(buf, n);
    }
    const int status = pipe ? ::pclose(pipe) : -1;
    const bool ok = status != -1 && WIFEXITED(status) && WEXITSTATUS(status) == 0;
    std::string last = out.substr(out.find_last_of('\n', out.size() >= 2 ? out.size() - 2 : 0) + 1);
    while (!last.empty() && last.back() == '\n') last.pop_back();
    report("aesust selfcheck exits 0", ok, last.empty() ? "no output" : last);
    if (!ok) std::cout << out;
  }

  std::error_code ec;
  fs::remove_all(work, ec);
  std::cout << (failures == 0 ? "all acceptance criteria passed" : std::to_string(failures) + " criteria FAILED")
            << std::endl;
  return failures == 0 ? 0 : 1;
}
