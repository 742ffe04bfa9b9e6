#include <gtest/gtest.h>

#include "ght/errors.hpp"
#include "ght/serialize.hpp"
#include "qas_fixtures.hpp"

using namespace ght;

namespace {

// Through text, as files would be.
Json reparse(const Json& j) { return Json::parse(j.dump()); }

QasPoint two_point(const Vec& x) { return DiscreteMeasure(1, {{-x[0]}, {x[0]}}, {0.5, 0.5}); }

}  // namespace

TEST(Serialize, MeasureRoundTrip) {
  Rng rng(1);
  for (int k = 0; k < 50; ++k) {
    const auto m = fixture::random_measure(rng, 2, 1 + k % 5, -3, 3);
    const auto back = measure_from_json(reparse(to_json(m)));
    EXPECT_EQ(back.atoms(), m.atoms());
    EXPECT_EQ(back.weights(), m.weights());
  }
}

TEST(Serialize, MeasureFileFormat) {
  const auto j = Json::parse(R"({"dim": 1, "atoms": [[0.5]], "weights": [1.0]})");
  EXPECT_TRUE(same_measure(measure_from_json(j), DiscreteMeasure::dirac({0.5})));
  const auto p = path_measure_from_json(Json::parse(R"({"dim": 1, "horizon": 2, "atoms": [[0, 1], [0, -1]],
                                                       "weights": [0.5, 0.5]})"));
  EXPECT_EQ(p.horizon(), 2u);
  EXPECT_EQ(p.step_dim(), 1u);
}

TEST(Serialize, MissingAndUnknownKeysNamed) {
  try {
    measure_from_json(Json::parse(R"({"dim": 1, "atoms": [[0]]})"));
    FAIL();
  } catch (const DomainError& e) {
    EXPECT_NE(std::string(e.what()).find("weights"), std::string::npos);
  }
  try {
    measure_from_json(Json::parse(R"({"dim": 1, "atoms": [[0]], "weights": [1], "mass": 2})"));
    FAIL();
  } catch (const DomainError& e) {
    EXPECT_NE(std::string(e.what()).find("mass"), std::string::npos);
  }
  EXPECT_THROW(measure_from_json(Json::parse(R"({"dim": "one", "atoms": [[0]], "weights": [1]})")), DomainError);
}

TEST(Serialize, SpacesAndPointsRoundTrip) {
  Rng rng(2);
  for (const auto& s : fixture::all_spaces()) {
    const auto back = space_from_json(reparse(to_json(s)));
    EXPECT_EQ(space_kind(back), space_kind(s));
    EXPECT_EQ(to_json(back), to_json(s));
    for (int k = 0; k < 10; ++k) {
      const auto y = fixture::random_point(s, rng);
      const auto z = point_from_json(s, reparse(to_json(y)));
      EXPECT_EQ(distance(s, y, z), 0.0) << space_kind(s);
    }
  }
}

TEST(Serialize, GaussianShape) {
  const GaussianMeasure g(Eigen::Vector2d(1, 2), Eigen::Matrix2d::Identity() * 2.0);
  const auto j = to_json(g);
  EXPECT_EQ(j.at("mean"), Json::array({1.0, 2.0}));
  EXPECT_EQ(j.at("cov").size(), 2u);
  EXPECT_EQ(gaussian_distance(gaussian_from_json(j), g), 0.0);
}

TEST(Serialize, TransformerEvaluatesIdentically) {
  const auto space = make_wasserstein_convex(1, 1.0, 2.0);
  std::vector<Vec> xs;
  for (int i = 0; i <= 40; ++i) xs.push_back({i / 40.0});
  const auto fit = fit_static_constructive(two_point, xs, space, 8, 2);
  const auto back = transformer_from_json(reparse(to_json(fit.gt)));
  Rng rng(3);
  for (int k = 0; k < 100; ++k) {
    const Vec x{rng.uniform(-0.5, 1.5)};
    EXPECT_EQ(distance(space, gt_eval(fit.gt, x), gt_eval(back, x)), 0.0);
  }
}

TEST(Serialize, GhtAndPathRoundTrip) {
  const auto map = sde_kernel_map([](double t, const Vec& x) { return Vec{0.1 * std::sin(t + x[0])}; },
                                  [](double, const Vec&) { return Eigen::MatrixXd::Constant(1, 1, 0.2); }, 1.0,
                                  DiscreteMeasure::dirac({0.0}), 4);
  Rng rng(4);
  std::vector<PathWindow> paths;
  const TimeGrid g = unit_grid(-2, 2);
  for (int i = 0; i < 20; ++i) {
    std::vector<Vec> v;
    for (std::size_t k = 0; k < g.times.size(); ++k) v.push_back({rng.uniform(-1, 1)});
    paths.push_back(make_window(g, v));
  }
  DynamicFitConfig cfg;
  cfg.encoder_hidden = {6};
  cfg.decoder_N = 6;
  const auto res = fit_dynamic(map, paths, 1, 0.2, cfg);
  const auto back = ght_from_json(reparse(to_json(res.ght)));
  EXPECT_EQ(back.schedule, res.ght.schedule);
  for (const auto& p : paths) {
    const auto q = path_from_json(reparse(to_json(p)));
    EXPECT_EQ(q.values, p.values);
    EXPECT_EQ(q.grid.times, p.grid.times);
    EXPECT_EQ(q.offset(), p.offset());
    for (int n = -1; n <= 2; ++n) EXPECT_EQ(distance(map.space, ght_eval(res.ght, p, n), ght_eval(back, q, n)), 0.0);
  }
}

TEST(Serialize, PathWindowValidation) {
  EXPECT_THROW(path_from_json(Json::parse(R"({"times": [0, 1, 1], "values": [[0], [0], [0]], "offset": 0})")),
               DomainError);
  EXPECT_THROW(path_from_json(Json::parse(R"({"times": [-1, 0.5], "values": [[0], [0]], "offset": -1})")),
               DomainError);
  const auto p = path_from_json(Json::parse(R"({"times": [2, 3, 5], "values": [[0], [1], [2]], "offset": 2})"));
  EXPECT_EQ(p.at(4)[0], 2.0);
  EXPECT_EQ(p.grid.delta_plus, 2.0);
  EXPECT_THROW(p.at(1), OutOfWindowError);
}
