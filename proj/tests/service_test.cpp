#include <future>
#include <json.hpp>
#include <thread>

#include "aesust/controls.hpp"
#include "aesust/service.hpp"
#include "aesust/synthetic.hpp"
#include "support.hpp"

// After Eigen: <resolv.h> defines a _res macro that clashes with Eigen internals.
#include <httplib.h>

using namespace aesust;
using namespace testing_support;
using json = nlohmann::json;

namespace {

std::string str(const std::vector<std::uint8_t>& b) { return {b.begin(), b.end()}; }

std::vector<std::uint8_t> half_mask_png(Index h, Index w, bool left) {
  Tensor<float> m({1, 1, h, w});
  for (Index y = 0; y < h; ++y)
    for (Index x = 0; x < w; ++x) m(0, 0, y, x) = ((x < w / 2) == left) ? 1.0f : 0.0f;
  return encode_png(m);
}

class Service : public ::testing::Test {
 protected:
  static constexpr std::size_t kPayloadCap = 1u << 20;

  void SetUp() override {
    Models<float> models = Models<float>::create(0.125, 21);
    service_ = std::make_unique<StylizeService>(models, "desk.aesu", ServiceLimits{1024, 4, kPayloadCap});
    service_->mount(server_, 4);
    port_ = server_.bind_to_any_port("127.0.0.1");
    ASSERT_GT(port_, 0);
    thread_ = std::thread([this] { server_.listen_after_bind(); });
    server_.wait_until_ready();
    content_ = encode_png(synthetic_content(64, 80, 1));
    style_ = encode_png(synthetic_style(48, 64, 2));
    style2_ = encode_png(synthetic_style(64, 64, 3));
  }

  void TearDown() override {
    server_.stop();
    thread_.join();
  }

  httplib::Client client() const {
    httplib::Client c("127.0.0.1", port_);
    c.set_read_timeout(60, 0);
    return c;
  }

  httplib::Result post(const httplib::MultipartFormDataItems& items) const { return client().Post("/api/stylize", items); }

  httplib::MultipartFormDataItems basic() const {
    return {{"content", str(content_), "c.png", "image/png"}, {"style", str(style_), "s.png", "image/png"}};
  }

  httplib::Server server_;
  std::unique_ptr<StylizeService> service_;
  std::thread thread_;
  int port_ = 0;
  std::vector<std::uint8_t> content_, style_, style2_;
};

}  // namespace

TEST_F(Service, HealthAndLimits) {
  auto res = client().Get("/api/health");
  ASSERT_TRUE(res);
  EXPECT_EQ(res->status, 200);
  const json h = json::parse(res->body);
  EXPECT_EQ(h["status"], "ok");
  EXPECT_EQ(h["checkpoint"], "desk.aesu");
  EXPECT_EQ(h["widths"]["relu4_1"], 64);

  res = client().Get("/api/limits");
  ASSERT_TRUE(res);
  const json l = json::parse(res->body);
  EXPECT_EQ(l["max_edge"], 1024);
  EXPECT_EQ(l["max_styles"], 4);
}

TEST_F(Service, StylizeMatchesSharedCodePath) {
  const auto res = post(basic());
  ASSERT_TRUE(res);
  ASSERT_EQ(res->status, 200) << res->body;
  EXPECT_EQ(res->get_header_value("Content-Type"), "image/png");
  StylizeRequest req;
  req.content = content_;
  req.styles = {style_};
  EXPECT_EQ(res->body, str(run_stylize(req, service_->models())));
  EXPECT_EQ(decode_image(std::vector<std::uint8_t>(res->body.begin(), res->body.end())).shape(),
            (Shape{1, 3, 64, 80}));
}

TEST_F(Service, AlphaZeroReturnsReconstruction) {
  auto items = basic();
  items.push_back({"alpha", "0", "", ""});
  const auto res = post(items);
  ASSERT_TRUE(res);
  ASSERT_EQ(res->status, 200) << res->body;
  const ImageTensor c = decode_image(content_);
  const auto recon = generator_forward(service_->models(), Var<float>(c), Var<float>(c), 1).image.value();
  EXPECT_EQ(res->body, str(encode_png(recon)));
}

TEST_F(Service, AllControlsReachable) {
  httplib::MultipartFormDataItems items = {{"content", str(content_), "c.png", "image/png"},
                                           {"style", str(style_), "a.png", "image/png"},
                                           {"style", str(style2_), "b.png", "image/png"},
                                           {"weights", "[0.25, 0.75]", "", ""},
                                           {"alpha", "0.6", "", ""},
                                           {"color_preserve", "true", "", ""}};
  auto res = post(items);
  ASSERT_TRUE(res);
  ASSERT_EQ(res->status, 200) << res->body;
  StylizeRequest req{content_, {style_, style2_}, {0.25, 0.75}, 0.6, true, {}};
  EXPECT_EQ(res->body, str(run_stylize(req, service_->models())));

  items = {{"content", str(content_), "c.png", "image/png"}, {"style", str(style_), "a.png", "image/png"},
           {"style", str(style2_), "b.png", "image/png"},   {"mask", str(half_mask_png(64, 80, true)), "m1.png", ""},
           {"mask", str(half_mask_png(64, 80, false)), "m2.png", ""}};
  res = post(items);
  ASSERT_TRUE(res);
  ASSERT_EQ(res->status, 200) << res->body;
  StylizeRequest masked{content_, {style_, style2_}, {}, 1.0, false, {half_mask_png(64, 80, true), half_mask_png(64, 80, false)}};
  EXPECT_EQ(res->body, str(run_stylize(masked, service_->models())));
}

TEST_F(Service, ValidationErrorsAreJson400) {
  auto expect_400 = [&](httplib::MultipartFormDataItems items, const std::string& needle) {
    const auto res = post(items);
    ASSERT_TRUE(res);
    EXPECT_EQ(res->status, 400);
    const json body = json::parse(res->body, nullptr, false);
    ASSERT_TRUE(body.is_object()) << res->body;
    EXPECT_NE(body["error"].get<std::string>().find(needle), std::string::npos) << body.dump();
  };
  auto items = basic();
  items.push_back({"style", str(style2_), "b.png", "image/png"});
  items.push_back({"weights", "0.5,0.4", "", ""});
  expect_400(items, "sum");

  items = basic();
  items.push_back({"alpha", "1.5", "", ""});
  expect_400(items, "alpha");

  expect_400({{"style", str(style_), "s.png", "image/png"}}, "content");
  expect_400({{"content", str(content_), "c.png", "image/png"}}, "style");
  expect_400({{"content", "garbage", "c.png", "image/png"}, {"style", str(style_), "s.png", "image/png"}}, "format");

  items = basic();
  items.push_back({"mask", str(half_mask_png(32, 32, true)), "m.png", ""});
  expect_400(items, "mask");

  httplib::MultipartFormDataItems five = {{"content", str(content_), "c.png", "image/png"}};
  for (int i = 0; i < 5; ++i) five.push_back({"style", str(style_), "s.png", "image/png"});
  expect_400(five, "at most 4");

  const auto big = encode_png(ImageTensor({1, 3, 16, 1040}));
  expect_400({{"content", str(big), "c.png", "image/png"}, {"style", str(style_), "s.png", "image/png"}}, "maximum edge");
}

TEST_F(Service, OversizedPayloadIs413) {
  auto items = basic();
  items.push_back({"style", std::string(kPayloadCap + 10, 'x'), "huge.png", "image/png"});
  const auto res = post(items);
  ASSERT_TRUE(res);
  EXPECT_EQ(res->status, 413);
}

TEST_F(Service, MalformedMultipartIs400) {
  auto res = client().Post("/api/stylize", "--xyz\r\nnot a part", "multipart/form-data; boundary=xyz");
  ASSERT_TRUE(res);
  EXPECT_EQ(res->status, 400);
  res = client().Post("/api/stylize", "{}", "application/json");
  ASSERT_TRUE(res);
  EXPECT_EQ(res->status, 400);
}

TEST_F(Service, ConcurrentRequestsAgree) {
  std::vector<std::future<std::pair<int, std::string>>> jobs;
  for (int i = 0; i < 4; ++i) {
    jobs.push_back(std::async(std::launch::async, [this] {
      const auto res = post(basic());
      return res ? std::make_pair(res->status, res->body) : std::make_pair(-1, std::string());
    }));
  }
  std::vector<std::pair<int, std::string>> results;
  for (auto& j : jobs) results.push_back(j.get());
  for (const auto& r : results) {
    EXPECT_EQ(r.first, 200);
    EXPECT_EQ(r.second, results[0].second);
  }
  // Stateless: a later identical request gives the same bytes.
  EXPECT_EQ(post(basic())->body, results[0].second);
}

TEST(ServiceParsing, WeightsFlagsAndGrid) {
  EXPECT_EQ(parse_weights("0.5, 0.5"), (std::vector<double>{0.5, 0.5}));
  EXPECT_EQ(parse_weights("[0.25,0.75]"), (std::vector<double>{0.25, 0.75}));
  EXPECT_TRUE(parse_weights("").empty());
  EXPECT_THROW(parse_weights("0.5,abc"), ValidationError);
  EXPECT_THROW(parse_weights("[0.5,"), ValidationError);
  EXPECT_TRUE(parse_flag("on"));
  EXPECT_FALSE(parse_flag("0"));
  EXPECT_THROW(parse_flag("perhaps"), ValidationError);

  const ServiceLimits limits;
  EXPECT_EQ(fit_to_grid(ImageTensor({1, 3, 70, 100}), limits).shape(), (Shape{1, 3, 64, 96}));
  EXPECT_EQ(fit_to_grid(ImageTensor({1, 3, 130, 200}), limits, 64).shape(), (Shape{1, 3, 128, 192}));
  EXPECT_THROW(fit_to_grid(ImageTensor({1, 3, 10, 100}), limits), ValidationError);

  Models<float> m = Models<float>::create(0.125, 1);
  EXPECT_EQ(input_grid(m), 16);
  m.stage = 2;
  EXPECT_EQ(input_grid(m), 64);
}

TEST(ServiceParsing, WorkerThreadsFromEnvironment) {
  ::setenv("AESUST_THREADS", "3", 1);
  EXPECT_EQ(worker_threads(), 3u);
  ::setenv("AESUST_THREADS", "zero", 1);
  EXPECT_GE(worker_threads(), 1u);
  ::unsetenv("AESUST_THREADS");
}
