#include "aesust/trainer.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <iomanip>
#include <iostream>
#include <sstream>

#include "aesust/config.hpp"

namespace aesust {

TrainConfig TrainConfig::desk() {
  TrainConfig cfg;
  cfg.width_multiplier = 0.125;
  cfg.crop = 64;
  cfg.resize_smaller_edge = 80;
  cfg.batch_size = 2;
  cfg.iterations = 500;
  cfg.optimizer.lr = 2e-4;
  cfg.checkpoint_every = 250;
  return cfg;
}

TrainConfig TrainConfig::parse(std::string_view text, const TrainConfig& base) {
  TrainConfig cfg = base;
  for (const ConfigEntry& e : parse_config(text)) {
    const std::string& k = e.key;
    if (k == "stage") {
      cfg.stage = static_cast<int>(parse_integer(e));
      if (cfg.stage != 1 && cfg.stage != 2) throw ConfigError("config: stage must be 1 or 2");
    } else if (k.rfind("lambda", 0) == 0 && k.size() == 7 && k[6] >= '1' && k[6] <= '9') {
      double* slots[] = {&cfg.weights.adv1, &cfg.weights.content1, &cfg.weights.style1,
                         &cfg.weights.identity, &cfg.weights.adv2, &cfg.weights.content2,
                         &cfg.weights.style2, &cfg.weights.ar1, &cfg.weights.ar2};
      const double w = parse_double(e);
      if (!(w >= 0)) throw ConfigError("config: '" + k + "' must be nonnegative");
      *slots[k[6] - '1'] = w;
    } else if (k == "lr") {
      cfg.optimizer.lr = parse_double(e);
    } else if (k == "beta1") {
      cfg.optimizer.beta1 = parse_double(e);
    } else if (k == "beta2") {
      cfg.optimizer.beta2 = parse_double(e);
    } else if (k == "batch_size") {
      cfg.batch_size = parse_integer(e);
    } else if (k == "iterations") {
      cfg.iterations = parse_integer(e);
    } else if (k == "resize_smaller_edge") {
      cfg.resize_smaller_edge = parse_integer(e);
    } else if (k == "crop") {
      cfg.crop = parse_integer(e);
    } else if (k == "seed") {
      cfg.seed = static_cast<std::uint64_t>(parse_integer(e));
    } else if (k == "ablation.adv") {
      cfg.ablation.adv = parse_bool(e);
    } else if (k == "ablation.ar1") {
      cfg.ablation.ar1 = parse_bool(e);
    } else if (k == "ablation.ar2") {
      cfg.ablation.ar2 = parse_bool(e);
    } else if (k == "ablation.identity") {
      cfg.ablation.identity = parse_bool(e);
    } else if (k == "width_multiplier") {
      cfg.width_multiplier = parse_double(e);
    } else if (k == "checkpoint_every") {
      cfg.checkpoint_every = parse_integer(e);
    } else if (k == "save_optimizer_state") {
      cfg.save_optimizer_state = parse_bool(e);
    } else {
      throw ConfigError("config line " + std::to_string(e.line) + ": unknown key '" + k + "'");
    }
  }
  if (cfg.batch_size < 1 || cfg.iterations < 0 || cfg.crop < 16 || cfg.crop % 16 != 0 || cfg.checkpoint_every < 1) {
    throw ConfigError("config: batch_size >= 1, iterations >= 0, checkpoint_every >= 1 and crop a positive multiple of 16 required");
  }
  if (!(cfg.width_multiplier > 0)) throw ConfigError("config: width_multiplier must be positive");
  return cfg;
}

std::string TrainConfig::to_text() const {
  std::ostringstream out;
  out << std::setprecision(17);
  const double lambdas[] = {weights.adv1, weights.content1, weights.style1, weights.identity, weights.adv2,
                            weights.content2, weights.style2, weights.ar1, weights.ar2};
  out << "stage = " << stage << '\n';
  for (int i = 0; i < 9; ++i) out << "lambda" << i + 1 << " = " << lambdas[i] << '\n';
  out << "lr = " << optimizer.lr << "\nbeta1 = " << optimizer.beta1 << "\nbeta2 = " << optimizer.beta2 << '\n'
      << "batch_size = " << batch_size << "\niterations = " << iterations << '\n'
      << "resize_smaller_edge = " << resize_smaller_edge << "\ncrop = " << crop << "\nseed = " << seed << '\n'
      << std::boolalpha << "ablation.adv = " << ablation.adv << "\nablation.ar1 = " << ablation.ar1
      << "\nablation.ar2 = " << ablation.ar2 << "\nablation.identity = " << ablation.identity << '\n'
      << "width_multiplier = " << width_multiplier << "\ncheckpoint_every = " << checkpoint_every
      << "\nsave_optimizer_state = " << save_optimizer_state << '\n';
  return out.str();
}

ImageTensor resize_smaller_edge(const ImageTensor& image, Index edge) {
  const Index h = image.dim(2), w = image.dim(3);
  if (h <= w) {
    return resize_bilinear(image, edge, std::max<Index>(edge, std::llround(static_cast<double>(w) * edge / h)));
  }
  return resize_bilinear(image, std::max<Index>(edge, std::llround(static_cast<double>(h) * edge / w)), edge);
}

ImageCorpus ImageCorpus::load(const std::filesystem::path& dir, Index smaller_edge, Index crop) {
  if (!std::filesystem::is_directory(dir)) throw std::runtime_error("not a directory: " + dir.string());
  std::vector<std::filesystem::path> files;
  for (const auto& entry : std::filesystem::directory_iterator(dir)) {
    if (entry.is_regular_file()) files.push_back(entry.path());
  }
  std::sort(files.begin(), files.end());
  if (files.empty()) throw std::runtime_error("image directory is empty: " + dir.string());

  ImageCorpus corpus;
  const Index edge = std::max(smaller_edge, crop);
  for (const auto& file : files) {
    try {
      corpus.images.push_back(resize_smaller_edge(decode_image(read_file(file)), edge));
    } catch (const std::exception& e) {
      corpus.skipped.push_back(file.string() + ": " + e.what());
      std::cerr << "warning: skipping " << file.string() << ": " << e.what() << '\n';
    }
  }
  if (corpus.images.empty()) throw FormatError("no decodable images in " + dir.string());
  return corpus;
}

namespace {

ImageTensor random_crops(const std::vector<ImageTensor>& images, Index count, Index crop, Rng& rng) {
  ImageTensor out({count, 3, crop, crop});
  std::uniform_int_distribution<std::size_t> pick(0, images.size() - 1);
  for (Index b = 0; b < count; ++b) {
    const ImageTensor& src = images[pick(rng)];
    const Index h = src.dim(2), w = src.dim(3);
    const Index top = std::uniform_int_distribution<Index>(0, h - crop)(rng);
    const Index left = std::uniform_int_distribution<Index>(0, w - crop)(rng);
    for (Index c = 0; c < 3; ++c) {
      for (Index y = 0; y < crop; ++y) {
        for (Index x = 0; x < crop; ++x) out(b, c, y, x) = src(0, c, top + y, left + x);
      }
    }
  }
  return out;
}

}  // namespace

Batch prepare_batch(const ImageCorpus& content, const ImageCorpus& style, const TrainConfig& cfg, Rng& rng) {
  Batch batch;
  batch.content = random_crops(content.images, cfg.batch_size, cfg.crop, rng);
  batch.style = random_crops(style.images, cfg.batch_size, cfg.crop, rng);
  return batch;
}

Batch prepare_batch(const std::filesystem::path& content_dir, const std::filesystem::path& style_dir,
                    const TrainConfig& cfg, Rng& rng) {
  return prepare_batch(ImageCorpus::load(content_dir, cfg.resize_smaller_edge, cfg.crop),
                       ImageCorpus::load(style_dir, cfg.resize_smaller_edge, cfg.crop), cfg, rng);
}

std::optional<double> LossReport::term(const std::string& name) const {
  for (const auto& [n, v] : terms) {
    if (n == name) return v;
  }
  return std::nullopt;
}

std::string LossReport::to_log_lines() const {
  std::ostringstream out;
  out << std::setprecision(9);
  for (const auto& [name, value] : terms) out << step << ' ' << name << ' ' << value << '\n';
  if (discriminator) out << step << " discriminator " << *discriminator << '\n';
  if (identity_mse) out << step << " identity_mse " << *identity_mse << '\n';
  out << step << " total " << total << '\n';
  return out.str();
}

Rng step_rng(std::uint64_t seed, long long step) {
  std::seed_seq seq{static_cast<std::uint32_t>(seed), static_cast<std::uint32_t>(seed >> 32),
                    static_cast<std::uint32_t>(step), static_cast<std::uint32_t>(static_cast<std::uint64_t>(step) >> 32)};
  return Rng(seq);
}

Trainer::Trainer(Models<float> models, TrainConfig cfg)
    : models_(std::move(models)), cfg_(std::move(cfg)), generator_opt_(cfg_.optimizer), discriminator_opt_(cfg_.optimizer) {
  if (cfg_.stage != 1 && cfg_.stage != 2) throw ConfigError("trainer: stage must be 1 or 2");
  models_.stage = cfg_.stage;
}

namespace {

double scalar_of(const Var<float>& v) { return static_cast<double>(v.value()[0]); }

void record(LossReport& report, const char* name, const std::optional<Var<float>>& v) {
  if (!v) return;
  const double value = scalar_of(*v);
  if (!std::isfinite(value)) {
    throw NumericError("non-finite loss term '" + std::string(name) + "' at step " + std::to_string(report.step));
  }
  report.terms.emplace_back(name, value);
}

void fill_report(LossReport& report, const GeneratorTerms<Var<float>>& terms) {
  record(report, "adv", terms.adv);
  record(report, "content", terms.content);
  record(report, "style", terms.style);
  record(report, "identity", terms.identity);
  record(report, "ar1", terms.ar1);
  record(report, "ar2", terms.ar2);
}

}  // namespace

std::optional<double> Trainer::update_discriminator(const Var<float>& real, const Var<float>& fake) {
  const ParameterList<float> params = models_.discriminator_parameters();
  set_trainable(params, true);
  zero_grads(params);
  const Var<float> loss = adv_loss_discriminator(models_.discriminator.discriminate(real),
                                                 models_.discriminator.discriminate(fake));
  const double value = scalar_of(loss);
  if (!std::isfinite(value)) throw NumericError("non-finite discriminator loss at step " + std::to_string(steps_ + 1));
  backward(loss);
  discriminator_opt_.step(params);
  zero_grads(params);
  return value;
}

void Trainer::update_generator(const Var<float>& total) {
  const ParameterList<float> params = models_.generator_parameters();
  zero_grads(params);
  backward(total);
  generator_opt_.step(params);
  zero_grads(params);
}

LossReport Trainer::step(const Batch& batch) {
  LossTrace trace;
  const ParameterList<float> disc = models_.discriminator_parameters();
  LossReport report;
  try {
    report = cfg_.stage == 1 ? stage1_step(batch) : stage2_step(batch);
  } catch (...) {
    set_trainable(disc, true);
    throw;
  }
  set_trainable(disc, true);
  report.evaluated = trace.names();
  ++steps_;
  return report;
}

LossReport Trainer::stage1_step(const Batch& batch) {
  LossReport report;
  report.step = steps_ + 1;
  report.stage = 1;
  const Var<float> ic(batch.content), is(batch.style);
  const Encoder<float>& enc = models_.encoder;
  const Decoder<float>& dec = models_.generator.decoder;
  const auto pc = enc.encode(ic);
  const auto ps = enc.encode(is);
  const Var<float>* no_aesthetic = nullptr;

  const Var<float> ics = dec.decode(fused_feature(models_, pc, ps, no_aesthetic));
  // The generator does not read the critic in this stage, so one forward pass serves both updates.
  if (cfg_.ablation.adv) report.discriminator = update_discriminator(is, detach(ics));
  set_trainable(models_.discriminator_parameters(), false);

  GeneratorTerms<Var<float>> terms;
  if (cfg_.ablation.adv) terms.adv = adv_loss_generator(models_.discriminator.discriminate(ics));
  const auto pcs = enc.encode(ics);
  terms.content = content_loss(pcs, pc);
  terms.style = style_loss(pcs, ps);
  if (cfg_.ablation.identity) {
    const Var<float> icc = dec.decode(fused_feature(models_, pc, pc, no_aesthetic));
    const Var<float> iss = dec.decode(fused_feature(models_, ps, ps, no_aesthetic));
    terms.identity = identity_loss(icc, ic, iss, is);
    report.identity_mse = static_cast<double>((icc.value().data() - ic.value().data()).squaredNorm()) /
                          static_cast<double>(ic.value().size());
  }
  fill_report(report, terms);
  const Var<float> total = stage1_generator_objective(terms, cfg_.weights, cfg_.ablation);
  report.total = scalar_of(total);
  if (!std::isfinite(report.total)) throw NumericError("non-finite stage I objective at step " + std::to_string(report.step));
  update_generator(total);
  return report;
}

LossReport Trainer::stage2_step(const Batch& batch) {
  LossReport report;
  report.step = steps_ + 1;
  report.stage = 2;
  const Var<float> ic(batch.content), is(batch.style);
  const Encoder<float>& enc = models_.encoder;
  const Decoder<float>& dec = models_.generator.decoder;
  const Discriminator<float>& disc = models_.discriminator;
  const auto pc = enc.encode(ic);
  const auto ps = enc.encode(is);

  if (cfg_.ablation.adv) {
    Var<float> fake;
    {
      NoGradGuard no_grad;
      const Var<float> fa = disc.aesthetic_features(is);
      fake = dec.decode(fused_feature(models_, pc, ps, &fa));
    }
    report.discriminator = update_discriminator(is, fake);
  }
  set_trainable(models_.discriminator_parameters(), false);

  // Aesthetic features come from the critic as updated above.
  const Var<float> fa_s = disc.aesthetic_features(is);
  const Var<float> ics = dec.decode(fused_feature(models_, pc, ps, &fa_s));

  GeneratorTerms<Var<float>> terms;
  if (cfg_.ablation.adv) terms.adv = adv_loss_generator(disc.discriminate(ics));
  const auto pcs = enc.encode(ics);
  terms.content = content_loss(pcs, pc);
  terms.style = style_loss(pcs, ps);
  Var<float> fa_cs;
  if (cfg_.ablation.ar1 || cfg_.ablation.ar2) fa_cs = disc.aesthetic_features(ics);
  if (cfg_.ablation.ar1) {
    const Var<float> icscs = dec.decode(fused_feature(models_, pcs, pcs, &fa_cs));
    terms.ar1 = ar1_loss(ics, icscs);
  }
  if (cfg_.ablation.ar2) terms.ar2 = ar2_loss(fa_s, fa_cs);
  fill_report(report, terms);
  const Var<float> total = stage2_generator_objective(terms, cfg_.weights, cfg_.ablation);
  report.total = scalar_of(total);
  if (!std::isfinite(report.total)) throw NumericError("non-finite stage II objective at step " + std::to_string(report.step));
  update_generator(total);
  return report;
}

TensorArchive Trainer::checkpoint() const {
  TensorArchive archive = models_to_archive(models_);
  archive.set_scalar("meta.step", static_cast<double>(steps_));
  if (cfg_.save_optimizer_state) {
    generator_opt_.save(archive, "adam.generator");
    discriminator_opt_.save(archive, "adam.discriminator");
  }
  return archive;
}

void Trainer::resume(const TensorArchive& checkpoint) {
  const auto stage = checkpoint.scalar("meta.stage");
  if (!stage || static_cast<int>(*stage) != cfg_.stage) {
    throw ConfigError("resume: checkpoint stage does not match the configured stage");
  }
  load_parameters(models_.all_parameters(), checkpoint);
  steps_ = static_cast<long long>(checkpoint.scalar("meta.step").value_or(0));
  generator_opt_.load(checkpoint, "adam.generator", models_.generator_parameters());
  discriminator_opt_.load(checkpoint, "adam.discriminator", models_.discriminator_parameters());
}

LossReport train_step(const Batch& batch, Trainer& trainer) { return trainer.step(batch); }

TensorArchive train(const TrainConfig& cfg, const TrainPaths& paths, const std::function<void(const LossReport&)>& on_step) {
  if (cfg.stage == 2 && !paths.resume) throw ConfigError("stage 2 training requires a stage-1 checkpoint to resume from");

  Models<float> models = Models<float>::create(cfg.width_multiplier, cfg.seed);
  std::optional<TensorArchive> resume_from;
  int resume_stage = 0;
  if (paths.resume) {
    resume_from = read_archive_file(*paths.resume);
    resume_stage = static_cast<int>(resume_from->scalar("meta.stage").value_or(0));
    if (resume_stage == 2 && cfg.stage == 1) throw ConfigError("cannot resume stage 1 from a stage-2 checkpoint");
    const auto width = resume_from->scalar("meta.width_multiplier");
    if (!width || *width != cfg.width_multiplier) {
      throw ConfigError("resume checkpoint width_multiplier does not match the config");
    }
  }
  Trainer trainer(std::move(models), cfg);
  if (resume_from) {
    if (resume_stage == cfg.stage) {
      trainer.resume(*resume_from);
    } else {
      // Stage II starts from every stage-I tensor, critic included.
      load_parameters(trainer.models().all_parameters(), *resume_from);
    }
  }

  const ImageCorpus content = ImageCorpus::load(paths.content_dir, cfg.resize_smaller_edge, cfg.crop);
  const ImageCorpus style = ImageCorpus::load(paths.style_dir, cfg.resize_smaller_edge, cfg.crop);
  const auto metrics_path = paths.metrics_log.value_or(std::filesystem::path(paths.out.string() + ".metrics.txt"));
  std::ofstream metrics(metrics_path, trainer.steps_done() > 0 ? std::ios::app : std::ios::trunc);
  if (!metrics) throw std::runtime_error("cannot open metrics log " + metrics_path.string());

  while (trainer.steps_done() < cfg.iterations) {
    Rng rng = step_rng(cfg.seed, trainer.steps_done());
    const LossReport report = trainer.step(prepare_batch(content, style, cfg, rng));
    metrics << report.to_log_lines();
    if (on_step) on_step(report);
    if (trainer.steps_done() % cfg.checkpoint_every == 0 && trainer.steps_done() < cfg.iterations) {
      metrics.flush();
      write_archive_file(paths.out, trainer.checkpoint());
    }
  }
  TensorArchive final_checkpoint = trainer.checkpoint();
  write_archive_file(paths.out, final_checkpoint);
  return final_checkpoint;
}

}  // namespace aesust
