#pragma once

#include <cstdint>
#include <string>
#include <string_view>
#include <vector>

#include "aesust/controls.hpp"

namespace httplib {
class Server;
}

namespace aesust {

struct ServiceLimits {
  Index max_edge = 1024;
  std::size_t max_styles = 4;
  std::size_t max_payload_bytes = 64u << 20;
};

/// Encoded inputs plus control parameters; shared by the CLI and the HTTP service.
struct StylizeRequest {
  std::vector<std::uint8_t> content;
  std::vector<std::vector<std::uint8_t>> styles;
  std::vector<double> weights;  // empty: [1] for one style
  double alpha = 1.0;
  bool color_preserve = false;
  std::vector<std::vector<std::uint8_t>> masks;  // grayscale, one per style, content-sized
};

/// "0.5,0.5" or a JSON array "[0.5, 0.5]".
std::vector<double> parse_weights(std::string_view text);
bool parse_flag(std::string_view text);

/// Rejects edges above the limit and shrinks each edge down to a multiple of `grid`.
ImageTensor fit_to_grid(const ImageTensor& image, const ServiceLimits& limits, Index grid = 16);
/// 16 for stage-1 checkpoints; 64 once the discriminator supplies F_a.
Index input_grid(const Models<float>& models);

/// Decode, apply controls, clamp and encode as PNG.
std::vector<std::uint8_t> run_stylize(const StylizeRequest& request, const Models<float>& models,
                                      const ServiceLimits& limits = {});

/// Worker count from AESUST_THREADS, else the hardware concurrency (at least 1).
std::size_t worker_threads();

/// HTTP front end over an immutable checkpoint.
class StylizeService {
 public:
  StylizeService(Models<float> models, std::string checkpoint_name, ServiceLimits limits = {});

  /// Registers /api/stylize, /api/health and /api/limits and sets the payload cap and worker pool.
  void mount(httplib::Server& server, std::size_t threads) const;

  std::string health_json() const;
  std::string limits_json() const;
  const Models<float>& models() const { return models_; }

 private:
  Models<float> models_;
  std::string checkpoint_name_;
  ServiceLimits limits_;
};

/// Blocks serving on host:port until the server stops.
void serve(const StylizeService& service, const std::string& host, int port);

}  // namespace aesust
