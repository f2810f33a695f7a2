#include <CLI11.hpp>

#include <chrono>
#include <cstdio>
#include <filesystem>
#include <iomanip>
#include <iostream>
#include <unistd.h>

#include "aesust/checks.hpp"
#include "aesust/service.hpp"
#include "aesust/synthetic.hpp"
#include "aesust/trainer.hpp"

namespace fs = std::filesystem;
using namespace aesust;

namespace {

int cmd_train(int stage, const std::string& config, const std::string& content_dir, const std::string& style_dir,
              const std::string& out, const std::string& resume) {
  if (stage == 2 && resume.empty()) {
    std::cerr << "usage error: --stage 2 requires --resume <stage-1 checkpoint>\n";
    return 2;
  }
  const auto text = read_file(config);
  TrainConfig cfg = TrainConfig::parse(std::string_view(reinterpret_cast<const char*>(text.data()), text.size()));
  cfg.stage = stage;
  TrainPaths paths{content_dir, style_dir, out, std::nullopt, std::nullopt};
  if (!resume.empty()) paths.resume = fs::path(resume);
  const auto start = std::chrono::steady_clock::now();
  train(cfg, paths, [&](const LossReport& r) {
    if (r.step == 1 || r.step % 50 == 0 || r.step == cfg.iterations) {
      const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
      std::cout << "stage " << r.stage << " step " << r.step << "/" << cfg.iterations << " total " << r.total;
      if (r.discriminator) std::cout << " critic " << *r.discriminator;
      std::cout << " (" << std::fixed << std::setprecision(1) << secs << " s)" << std::defaultfloat << std::endl;
    }
  });
  std::cout << "wrote " << out << "\n";
  return 0;
}

int cmd_stylize(const std::string& checkpoint, const std::string& content, const std::vector<std::string>& styles,
                const std::string& weights, double alpha, bool preserve_color, const std::vector<std::string>& masks,
                const std::string& out) {
  const Models<float> models = models_from_archive<float>(read_archive_file(checkpoint));
  StylizeRequest request;
  request.content = read_file(content);
  for (const auto& s : styles) request.styles.push_back(read_file(s));
  for (const auto& m : masks) request.masks.push_back(read_file(m));
  request.weights = parse_weights(weights);
  request.alpha = alpha;
  request.color_preserve = preserve_color;
  write_file_atomic(out, run_stylize(request, models));
  std::cout << "wrote " << out << "\n";
  return 0;
}

int cmd_selfcheck(const std::string& workdir) {
  const fs::path dir = workdir.empty() ? fs::temp_directory_path() / ("aesust-selfcheck-" + std::to_string(::getpid()))
                                       : fs::path(workdir);
  const auto start = std::chrono::steady_clock::now();
  bool all = true;
  run_selfcheck(dir, [&](const CheckResult& r) {
    all = all && r.passed;
    std::cout << (r.passed ? "pass " : "FAIL ") << std::left << std::setw(26) << r.name << std::right << std::fixed
              << std::setprecision(2) << std::setw(7) << r.seconds << " s  " << r.detail << std::endl;
  });
  const double total = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  std::cout << (all ? "all checks passed" : "some checks FAILED") << " in " << std::fixed << std::setprecision(1)
            << total << " s\n";
  if (workdir.empty()) fs::remove_all(dir);
  return all ? 0 : 1;
}

int cmd_serve(const std::string& checkpoint, const std::string& host, int port) {
  StylizeService service(models_from_archive<float>(read_archive_file(checkpoint)), fs::path(checkpoint).filename().string());
  std::cout << "serving " << checkpoint << " on http://" << host << ":" << port << " with " << worker_threads()
            << " workers" << std::endl;
  serve(service, host, port);
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"aesust: aesthetic-enhanced universal style transfer"};
  app.require_subcommand(1);

  auto* train = app.add_subcommand("train", "Run one training stage");
  int stage = 1;
  std::string config, content_dir, style_dir, out, resume;
  train->add_option("--stage", stage, "1 (pre-training) or 2 (fine-tuning)")->required()->check(CLI::IsMember({1, 2}));
  train->add_option("--config", config, "key = value training config")->required()->check(CLI::ExistingFile);
  train->add_option("--content-dir", content_dir)->required()->check(CLI::ExistingDirectory);
  train->add_option("--style-dir", style_dir)->required()->check(CLI::ExistingDirectory);
  train->add_option("--out", out, "checkpoint path")->required();
  train->add_option("--resume", resume, "checkpoint to continue from (required for stage 2)")->check(CLI::ExistingFile);

  auto* stylize = app.add_subcommand("stylize", "Stylize one content image");
  std::string checkpoint, content, weights, image_out;
  std::vector<std::string> styles, masks;
  double alpha = 1.0;
  bool preserve_color = false;
  stylize->add_option("--checkpoint", checkpoint)->required()->check(CLI::ExistingFile);
  stylize->add_option("--content", content)->required()->check(CLI::ExistingFile);
  stylize->add_option("--style", styles, "repeat for interpolation or masks")->required()->check(CLI::ExistingFile);
  stylize->add_option("--weights", weights, "comma-separated interpolation weights");
  stylize->add_option("--alpha", alpha, "content-style trade-off in [0,1]");
  stylize->add_flag("--preserve-color", preserve_color, "match style colors to the content first");
  stylize->add_option("--mask", masks, "grayscale region mask per style")->check(CLI::ExistingFile);
  stylize->add_option("--out", image_out, "output PNG")->required();

  auto* selfcheck = app.add_subcommand("selfcheck", "Run the gradient, invariant and desk training suite");
  std::string workdir;
  selfcheck->add_option("--workdir", workdir, "keep the corpus and checkpoints here");

  auto* serve = app.add_subcommand("serve", "HTTP stylization service");
  std::string host = "127.0.0.1";
  int port = 8080;
  serve->add_option("--checkpoint", checkpoint)->required()->check(CLI::ExistingFile);
  serve->add_option("--port", port);
  serve->add_option("--host", host);

  auto* demo = app.add_subcommand("demo-corpus", "Write a synthetic 8+8 image corpus");
  std::string demo_out;
  demo->add_option("--out", demo_out)->required();

  CLI11_PARSE(app, argc, argv);

  try {
    if (*train) return cmd_train(stage, config, content_dir, style_dir, out, resume);
    if (*stylize) return cmd_stylize(checkpoint, content, styles, weights, alpha, preserve_color, masks, image_out);
    if (*selfcheck) return cmd_selfcheck(workdir);
    if (*serve) return cmd_serve(checkpoint, host, port);
    if (*demo) {
      const SyntheticCorpus c = write_synthetic_corpus(demo_out);
      std::cout << "wrote " << c.content_dir.string() << " and " << c.style_dir.string() << "\n";
      return 0;
    }
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  return 0;
}
