#pragma once

#include <cstdint>
#include <filesystem>
#include <functional>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "aesust/image_io.hpp"
#include "aesust/losses.hpp"
#include "aesust/model.hpp"
#include "aesust/optim.hpp"

namespace aesust {

/// Training settings. Config-file keys (key = value) are listed beside each field.
struct TrainConfig {
  int stage = 1;                      // stage
  LossWeights weights;                // lambda1 .. lambda9
  AdamSettings optimizer;             // lr, beta1, beta2
  Index batch_size = 4;               // batch_size
  Index iterations = 80000;           // iterations
  Index resize_smaller_edge = 512;    // resize_smaller_edge
  Index crop = 256;                   // crop
  std::uint64_t seed = 0;             // seed
  LossToggles ablation;               // ablation.adv, ablation.ar1, ablation.ar2, ablation.identity
  double width_multiplier = 1.0;      // width_multiplier
  Index checkpoint_every = 1000;      // checkpoint_every
  bool save_optimizer_state = true;   // save_optimizer_state

  /// CPU-sized profile: 1/8 widths, 64² crops, batch 2, 500 iterations.
  static TrainConfig desk();
  /// Applies `text` on top of `base`; unknown keys raise ConfigError naming the key.
  static TrainConfig parse(std::string_view text, const TrainConfig& base);
  static TrainConfig parse(std::string_view text) { return parse(text, TrainConfig{}); }
  std::string to_text() const;
};

/// Content and style crops, each B×3×crop×crop in [0,1].
struct Batch {
  ImageTensor content;
  ImageTensor style;
};

/// Aspect-preserving resize so the smaller edge equals `edge`.
ImageTensor resize_smaller_edge(const ImageTensor& image, Index edge);

/// Decoded images of one directory, pre-resized for cropping.
struct ImageCorpus {
  std::vector<ImageTensor> images;
  std::vector<std::string> skipped;  // undecodable files, with reasons

  /// Files are read in name order. The smaller edge is resized to
  /// max(smaller_edge, crop) so every image can hold a crop.
  static ImageCorpus load(const std::filesystem::path& dir, Index smaller_edge, Index crop);
};

/// Uniformly picks batch_size images per corpus and crops each at a uniform offset.
Batch prepare_batch(const ImageCorpus& content, const ImageCorpus& style, const TrainConfig& cfg, Rng& rng);
Batch prepare_batch(const std::filesystem::path& content_dir, const std::filesystem::path& style_dir,
                    const TrainConfig& cfg, Rng& rng);

struct LossReport {
  long long step = 0;
  int stage = 1;
  std::vector<std::pair<std::string, double>> terms;  // unweighted generator terms
  double total = 0;                                   // weighted generator objective
  std::optional<double> discriminator;                // critic loss, when updated
  std::optional<double> identity_mse;                 // mean squared I_cc − I_c (stage I)
  std::vector<std::string> evaluated;                 // every loss function invoked during the step

  std::optional<double> term(const std::string& name) const;
  /// "<step> <name> <value>" records, one per line.
  std::string to_log_lines() const;
};

/// Owns models and optimizers; each step updates the critic once, then the generator once.
class Trainer {
 public:
  Trainer(Models<float> models, TrainConfig cfg);

  LossReport step(const Batch& batch);

  Models<float>& models() { return models_; }
  const Models<float>& models() const { return models_; }
  const TrainConfig& config() const { return cfg_; }
  long long steps_done() const { return steps_; }

  /// Model tensors, meta.step, and optimizer state when save_optimizer_state is set.
  TensorArchive checkpoint() const;
  /// Continues a same-stage run from `checkpoint`.
  void resume(const TensorArchive& checkpoint);

 private:
  LossReport stage1_step(const Batch& batch);
  LossReport stage2_step(const Batch& batch);
  std::optional<double> update_discriminator(const Var<float>& real, const Var<float>& fake);
  void update_generator(const Var<float>& total);

  Models<float> models_;
  TrainConfig cfg_;
  Adam<float> generator_opt_;
  Adam<float> discriminator_opt_;
  long long steps_ = 0;
};

/// One training step (the free-function form of Trainer::step).
LossReport train_step(const Batch& batch, Trainer& trainer);

/// Per-step data RNG; depends only on (seed, step) so resumed runs draw the same batches.
Rng step_rng(std::uint64_t seed, long long step);

struct TrainPaths {
  std::filesystem::path content_dir;
  std::filesystem::path style_dir;
  std::filesystem::path out;
  std::optional<std::filesystem::path> resume;
  std::optional<std::filesystem::path> metrics_log;  // defaults to <out>.metrics.txt
};

/// Runs cfg.iterations steps, checkpointing every cfg.checkpoint_every steps and at the end.
/// Stage 2 requires `paths.resume` to name a checkpoint.
TensorArchive train(const TrainConfig& cfg, const TrainPaths& paths,
                    const std::function<void(const LossReport&)>& on_step = {});

}  // namespace aesust
