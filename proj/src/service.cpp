#include "aesust/service.hpp"

#include <httplib.h>

#include <charconv>
#include <cstdlib>
#include <json.hpp>
#include <thread>

namespace aesust {

namespace {

using json = nlohmann::json;

std::string trim(std::string_view s) {
  const auto b = s.find_first_not_of(" \t\r\n");
  if (b == std::string_view::npos) return {};
  const auto e = s.find_last_not_of(" \t\r\n");
  return std::string(s.substr(b, e - b + 1));
}

double parse_number(std::string_view text, const char* what) {
  const std::string t = trim(text);
  double v = 0;
  const auto [ptr, ec] = std::from_chars(t.data(), t.data() + t.size(), v);
  if (t.empty() || ec != std::errc() || ptr != t.data() + t.size()) {
    throw ValidationError(std::string("invalid ") + what + " '" + t + "'");
  }
  return v;
}

std::vector<std::uint8_t> bytes_of(const std::string& s) { return {s.begin(), s.end()}; }

json error_json(const std::string& message) { return json{{"error", message}}; }

}  // namespace

std::vector<double> parse_weights(std::string_view text) {
  const std::string t = trim(text);
  std::vector<double> out;
  if (t.empty()) return out;
  if (t.front() == '[') {
    const json arr = json::parse(t, nullptr, false);
    if (arr.is_discarded() || !arr.is_array()) throw ValidationError("weights: malformed JSON array");
    for (const auto& v : arr) {
      if (!v.is_number()) throw ValidationError("weights: entries must be numbers");
      out.push_back(v.get<double>());
    }
    return out;
  }
  std::size_t start = 0;
  while (start <= t.size()) {
    const std::size_t comma = t.find(',', start);
    const std::size_t end = comma == std::string::npos ? t.size() : comma;
    out.push_back(parse_number(std::string_view(t).substr(start, end - start), "weight"));
    if (comma == std::string::npos) break;
    start = comma + 1;
  }
  return out;
}

bool parse_flag(std::string_view text) {
  const std::string t = trim(text);
  if (t == "1" || t == "true" || t == "on" || t == "yes") return true;
  if (t.empty() || t == "0" || t == "false" || t == "off" || t == "no") return false;
  throw ValidationError("invalid flag '" + t + "'");
}

Index input_grid(const Models<float>& models) { return models.stage == 2 ? 64 : 16; }

ImageTensor fit_to_grid(const ImageTensor& image, const ServiceLimits& limits, Index grid) {
  const Index h = image.dim(2), w = image.dim(3);
  if (h > limits.max_edge || w > limits.max_edge) {
    throw ValidationError("image " + std::to_string(w) + "x" + std::to_string(h) + " exceeds the maximum edge " +
                          std::to_string(limits.max_edge));
  }
  if (h < grid || w < grid) throw ValidationError("image edges must be at least " + std::to_string(grid) + " pixels");
  if (h % grid == 0 && w % grid == 0) return image;
  return resize_bilinear(image, h / grid * grid, w / grid * grid);
}

std::vector<std::uint8_t> run_stylize(const StylizeRequest& request, const Models<float>& models,
                                      const ServiceLimits& limits) {
  if (request.styles.empty()) throw ValidationError("at least one style image is required");
  if (request.styles.size() > limits.max_styles) {
    throw ValidationError("at most " + std::to_string(limits.max_styles) + " styles are allowed");
  }
  const ImageTensor raw_content = decode_image(request.content);
  const Index grid = input_grid(models);
  const ImageTensor content = fit_to_grid(raw_content, limits, grid);
  std::vector<ImageTensor> styles;
  for (const auto& bytes : request.styles) styles.push_back(fit_to_grid(decode_image(bytes), limits, grid));

  ControlSettings settings;
  settings.weights = request.weights;
  settings.alpha = request.alpha;
  settings.preserve_color = request.color_preserve;
  for (std::size_t i = 0; i < request.masks.size(); ++i) {
    const Tensor<float> mask = decode_mask(request.masks[i]);
    if (mask.dim(2) != raw_content.dim(2) || mask.dim(3) != raw_content.dim(3)) {
      throw ValidationError("mask " + std::to_string(i) + " does not match the content image size");
    }
    settings.masks.masks.push_back(resize_mask_nearest(mask, content.dim(2), content.dim(3)));
  }
  return encode_png(apply_controls(models, content, styles, settings));
}

std::size_t worker_threads() {
  if (const char* env = std::getenv("AESUST_THREADS")) {
    std::size_t n = 0;
    const std::string_view s(env);
    const auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), n);
    if (ec == std::errc() && ptr == s.data() + s.size() && n > 0) return n;
  }
  return std::max(1u, std::thread::hardware_concurrency());
}

StylizeService::StylizeService(Models<float> models, std::string checkpoint_name, ServiceLimits limits)
    : models_(std::move(models)), checkpoint_name_(std::move(checkpoint_name)), limits_(limits) {}

std::string StylizeService::health_json() const {
  const EncoderSpec enc = EncoderSpec::vgg19(models_.width_multiplier);
  return json{{"status", "ok"},
              {"checkpoint", checkpoint_name_},
              {"stage", models_.stage},
              {"widths",
               {{"multiplier", models_.width_multiplier},
                {"relu4_1", enc.tap_channels(Tap::relu4_1)},
                {"relu5_1", enc.tap_channels(Tap::relu5_1)},
                {"aesthetic", DiscriminatorSpec::scaled(models_.width_multiplier).feature_channels()}}}}
      .dump();
}

std::string StylizeService::limits_json() const {
  return json{{"max_edge", limits_.max_edge}, {"max_styles", limits_.max_styles},
              {"max_payload_bytes", limits_.max_payload_bytes}}
      .dump();
}

void StylizeService::mount(httplib::Server& server, std::size_t threads) const {
  server.set_payload_max_length(limits_.max_payload_bytes);
  server.new_task_queue = [threads] { return new httplib::ThreadPool(threads); };

  server.Get("/api/health", [this](const httplib::Request&, httplib::Response& res) {
    res.set_content(health_json(), "application/json");
  });
  server.Get("/api/limits", [this](const httplib::Request&, httplib::Response& res) {
    res.set_content(limits_json(), "application/json");
  });
  server.Post("/api/stylize", [this](const httplib::Request& req, httplib::Response& res) {
    try {
      if (!req.is_multipart_form_data()) throw ValidationError("expected multipart/form-data");
      if (!req.has_file("content")) throw ValidationError("missing field 'content'");
      StylizeRequest request;
      request.content = bytes_of(req.get_file_value("content").content);
      for (const auto& f : req.get_file_values("style")) request.styles.push_back(bytes_of(f.content));
      for (const auto& f : req.get_file_values("mask")) request.masks.push_back(bytes_of(f.content));
      if (req.has_file("weights")) request.weights = parse_weights(req.get_file_value("weights").content);
      if (req.has_file("alpha")) request.alpha = parse_number(req.get_file_value("alpha").content, "alpha");
      if (req.has_file("color_preserve")) request.color_preserve = parse_flag(req.get_file_value("color_preserve").content);
      const auto png = run_stylize(request, models_, limits_);
      res.set_content(std::string(png.begin(), png.end()), "image/png");
    } catch (const std::runtime_error& e) {
      // Library errors all describe bad input at this point.
      res.status = 400;
      res.set_content(error_json(e.what()).dump(), "application/json");
    }
  });
  server.set_exception_handler([](const httplib::Request&, httplib::Response& res, std::exception_ptr ep) {
    std::string what = "internal error";
    try {
      std::rethrow_exception(ep);
    } catch (const std::exception& e) {
      what = e.what();
    } catch (...) {
    }
    res.status = 500;
    res.set_content(error_json(what).dump(), "application/json");
  });
}

void serve(const StylizeService& service, const std::string& host, int port) {
  httplib::Server server;
  service.mount(server, worker_threads());
  if (!server.listen(host, port)) throw std::runtime_error("cannot listen on " + host + ":" + std::to_string(port));
}

}  // namespace aesust
