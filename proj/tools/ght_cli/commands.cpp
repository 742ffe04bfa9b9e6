#include <cmath>
#include <fstream>
#include <functional>
#include <set>

#include "ght/causal.hpp"
#include "ght/complexity.hpp"
#include "ght/errors.hpp"
#include "ght/gaussian.hpp"
#include "ght/hypertransformer.hpp"
#include "ght/rng.hpp"
#include "ght/transformer.hpp"
#include "ght/transport.hpp"
#include "harness.hpp"

namespace ght::cli {

namespace {

Json read_json_file(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw DomainError("cannot open input file " + path.string());
  try {
    return Json::parse(in);
  } catch (const Json::parse_error& e) {
    throw DomainError("malformed JSON in " + path.string() + ": " + e.what());
  }
}

std::filesystem::path resolve(const Run& run, const std::string& file) {
  const std::filesystem::path p(file);
  return p.is_absolute() ? p : run.config_dir() / p;
}

// Rethrows a reader error with the input it came from.
template <class F>
auto with_source(const std::string& source, F&& f) {
  try {
    return f();
  } catch (const DomainError& e) {
    throw DomainError(source + ": " + e.what());
  } catch (const Json::exception& e) {
    throw DomainError(source + ": " + e.what());
  }
}

// ---------------------------------------------------------------- metric

struct NamedPathMeasure {
  std::string name;
  PathMeasure m;
};

NamedPathMeasure load_measure(const Run& run, const Json& entry, std::size_t index) {
  const std::string where = "config.measures[" + std::to_string(index) + "]";
  if (entry.is_string()) {
    const auto path = resolve(run, entry.get<std::string>());
    return {path.stem().string(), with_source(path.string(), [&] { return path_measure_from_json(read_json_file(path)); })};
  }
  const Config c(entry, where);
  c.allow({"name", "file", "measure"});
  if (c.has("file") == c.has("measure")) throw DomainError(where + ": give exactly one of \"file\" or \"measure\"");
  if (c.has("file")) {
    const auto path = resolve(run, c.get<std::string>("file"));
    return {c.get<std::string>("name", path.stem().string()),
            with_source(path.string(), [&] { return path_measure_from_json(read_json_file(path)); })};
  }
  return {c.get<std::string>("name", "m" + std::to_string(index)),
          with_source(where + ".measure", [&] { return path_measure_from_json(c.json().at("measure")); })};
}

}  // namespace

int cmd_metric(Run& run) {
  const Config& cfg = run.config();
  cfg.allow({"seed", "threads", "out", "tolerances", "p", "measures", "gaussians"});
  if (cfg.has("tolerances")) cfg.child("tolerances").allow({});
  const double p = cfg.get<double>("p", 1.0);
  if (!(p >= 1.0)) throw DomainError("config: \"p\" must be at least 1");
  if (!cfg.has("measures") && !cfg.has("gaussians")) throw DomainError("config: need \"measures\" or \"gaussians\"");
  Stopwatch sw;

  if (cfg.has("measures")) {
    const Json& list = require(cfg.json(), "measures");
    if (!list.is_array()) throw DomainError("config: \"measures\" must be an array");
    std::vector<NamedPathMeasure> ms;
    for (std::size_t i = 0; i < list.size(); ++i) ms.push_back(load_measure(run, list[i], i));
    std::vector<std::vector<std::string>> rows;
    for (std::size_t i = 0; i < ms.size(); ++i)
      for (std::size_t k = i + 1; k < ms.size(); ++k) {
        const auto &a = ms[i].m, &b = ms[k].m;
        if (a.step_dim() != b.step_dim() || a.horizon() != b.horizon())
          throw DomainError("measures \"" + ms[i].name + "\" and \"" + ms[k].name + "\" differ in \"dim\" or \"horizon\"");
        rows.push_back({ms[i].name, ms[k].name, fmt_double(p), fmt_double(path_wasserstein_p(a, b, p)),
                        fmt_double(adapted_wasserstein_p(a, b, p)), fmt_double(total_variation(a.base(), b.base()))});
      }
    run.write_csv("metric.csv", {"a", "b", "p", "W_p", "AW_p", "TV"}, rows);
  }

  if (cfg.has("gaussians")) {
    std::vector<std::pair<std::string, GaussianMeasure>> gs;
    for (const auto& c : cfg.children("gaussians")) {
      c.allow({"name", "mean", "cov"});
      Json body = c.json();
      body.erase("name");
      gs.emplace_back(c.get<std::string>("name", "g" + std::to_string(gs.size())),
                      with_source("config.gaussians", [&] { return gaussian_from_json(body); }));
    }
    std::vector<std::vector<std::string>> rows;
    for (std::size_t i = 0; i < gs.size(); ++i)
      for (std::size_t k = i + 1; k < gs.size(); ++k) {
        if (gs[i].second.dim() != gs[k].second.dim())
          throw DomainError("gaussians \"" + gs[i].first + "\" and \"" + gs[k].first + "\" differ in dimension");
        rows.push_back({gs[i].first, gs[k].first, fmt_double(gaussian_distance(gs[i].second, gs[k].second))});
      }
    run.write_csv("gaussian.csv", {"a", "b", "distance"}, rows);
  }
  run.time("metric", sw.seconds());
  return 0;
}

// ---------------------------------------------------------------- complexity

int cmd_complexity(Run& run) {
  const Config& cfg = run.config();
  cfg.allow({"seed", "threads", "out", "tolerances", "table", "kinds", "n", "m", "alpha", "lipschitz", "diam", "kappa",
             "C_eta", "c", "eps_A", "eps_Q", "eps", "W", "D", "eps_tilde", "depth", "q"});
  if (cfg.has("tolerances")) cfg.child("tolerances").allow({});
  const auto table = cfg.get<std::string>("table", "static");
  if (table != "static" && table != "ffnn") throw DomainError("config: \"table\" must be \"static\" or \"ffnn\"");
  std::vector<ActivationKind> kinds;
  for (const auto& k : cfg.get<std::vector<std::string>>("kinds", {"singular", "smooth", "classical"}))
    kinds.push_back(with_source("config.kinds", [&] { return activation_kind_from_string(k); }));

  auto opt = [&](const char* key) { return cfg.has(key) ? std::optional<double>(cfg.get<double>(key)) : std::nullopt; };
  const std::optional<double> c = opt("c");
  if (!c && !run.strict()) run.stamp_default("absolute constant c not given; using c = 1");

  Stopwatch sw;
  std::vector<std::vector<std::string>> rows;
  std::set<std::string> notes;
  const auto eps_key = table == "static" ? "eps_A" : "eps";
  const auto eps_list = cfg.has(eps_key) ? cfg.list(eps_key) : std::vector<double>{0.1};
  for (ActivationKind kind : kinds)
    for (double eps : eps_list) {
      ComplexityReport r;
      if (table == "static") {
        StaticComplexityInput in;
        in.kind = kind;
        in.n = cfg.get<int>("n", 1);
        in.alpha = cfg.get<double>("alpha", 1.0);
        in.lipschitz = cfg.get<double>("lipschitz", 1.0);
        in.diam = cfg.get<double>("diam", 1.0);
        in.kappa = cfg.get<double>("kappa", 2.0);
        in.C_eta = cfg.get<double>("C_eta", 1.0);
        in.c = c;
        in.eps_A = eps;
        in.eps_Q = cfg.get<double>("eps_Q", 0.1);
        in.W = opt("W");
        in.D = opt("D");
        in.eps_tilde = opt("eps_tilde");
        in.depth = opt("depth");
        if (cfg.has("q")) in.q = cfg.get<int>("q");
        in.strict = run.strict();
        r = complexity_static(in);
      } else {
        FfnnComplexityInput in;
        in.kind = kind;
        in.n = cfg.get<int>("n", 1);
        in.m = cfg.get<int>("m", 1);
        in.alpha = cfg.get<double>("alpha", 1.0);
        in.lipschitz = cfg.get<double>("lipschitz", 1.0);
        in.diam = cfg.get<double>("diam", 1.0);
        in.kappa = cfg.get<double>("kappa", 2.0);
        in.c = c;
        in.W = opt("W");
        in.D = opt("D");
        in.eps = eps;
        in.eps_tilde = opt("eps_tilde");
        in.depth = opt("depth");
        in.strict = run.strict();
        r = complexity_ffnn(in);
      }
      auto row = complexity_csv_row(r);
      row.insert(row.begin(), fmt_double(eps));
      rows.push_back(row);
      for (const auto& n : r.notes) notes.insert(n);
    }
  auto header = complexity_csv_header();
  header.insert(header.begin(), eps_key);
  run.write_csv("complexity.csv", header, rows);
  for (const auto& n : notes)
    if (n.find("absolute constant c") == std::string::npos) run.stamp_default(n);
  run.time("complexity", sw.seconds());
  return 0;
}

// ---------------------------------------------------------------- static-fit

namespace {

std::vector<Vec> box_grid(const Vec& lower, const Vec& upper, int count) {
  if (lower.size() != upper.size() || lower.empty()) throw DomainError("config.domain: \"lower\"/\"upper\" mismatch");
  if (count < 1) throw DomainError("config.domain: \"count\" must be positive");
  const std::size_t n = lower.size();
  std::vector<Vec> out;
  std::vector<int> idx(n, 0);
  while (true) {
    Vec x(n);
    for (std::size_t k = 0; k < n; ++k)
      x[k] = count == 1 ? lower[k] : lower[k] + (upper[k] - lower[k]) * idx[k] / (count - 1.0);
    out.push_back(x);
    std::size_t k = 0;
    while (k < n && ++idx[k] == count) idx[k++] = 0;
    if (k == n) break;
  }
  return out;
}

struct StaticTarget {
  TargetFn f;
  QasSpace space;
};

StaticTarget static_target(const Config& t, int n) {
  t.allow({"kind", "value"});
  const auto kind = t.get<std::string>("kind");
  if (kind == "two_point")
    return {[](const Vec& x) -> QasPoint {
              Vec neg(x);
              for (double& v : neg) v = -v;
              return DiscreteMeasure(x.size(), {neg, x}, {0.5, 0.5});
            },
            make_wasserstein_convex(n, 1.0, 2.0)};
  if (kind == "dirac")
    return {[](const Vec& x) -> QasPoint { return DiscreteMeasure::dirac(x); }, make_wasserstein_convex(n, 1.0, 2.0)};
  if (kind == "constant") {
    const Vec v = t.get<Vec>("value");
    return {[v](const Vec&) -> QasPoint { return DiscreteMeasure::dirac(v); },
            make_wasserstein_convex(static_cast<int>(v.size()), 1.0, 2.0)};
  }
  if (kind == "gaussian_shift")
    return {[](const Vec& x) -> QasPoint {
              return GaussianMeasure(Eigen::Map<const Eigen::VectorXd>(x.data(), static_cast<Eigen::Index>(x.size())),
                                     Eigen::MatrixXd::Identity(static_cast<Eigen::Index>(x.size()),
                                                               static_cast<Eigen::Index>(x.size())));
            },
            make_gaussian_spd(n)};
  throw DomainError("config.target: unknown \"kind\" \"" + kind + "\"");
}

}  // namespace

int cmd_static_fit(Run& run) {
  const Config& cfg = run.config();
  cfg.allow({"seed", "threads", "out", "tolerances", "target", "space", "domain", "test_count", "mode", "N", "q",
             "activation", "hidden", "feature_gain", "beta", "lipschitz", "holder_alpha", "write_model"});
  if (cfg.has("tolerances")) cfg.child("tolerances").allow({});
  const Config dom = cfg.child("domain");
  dom.allow({"lower", "upper", "count"});
  const Vec lower = dom.get<Vec>("lower"), upper = dom.get<Vec>("upper");
  const auto train = box_grid(lower, upper, dom.get<int>("count"));
  StaticTarget target = static_target(cfg.child("target"), static_cast<int>(lower.size()));
  if (cfg.has("space")) target.space = with_source("config.space", [&] { return space_from_json(cfg.json().at("space")); });

  const auto mode = cfg.get<std::string>("mode", "constructive");
  if (mode != "constructive" && mode != "end2end") throw DomainError("config: \"mode\" must be constructive or end2end");
  FitConfig fc;
  fc.threads = run.threads();
  if (cfg.has("test_count")) fc.test_x = box_grid(lower, upper, cfg.get<int>("test_count"));
  if (cfg.has("lipschitz")) fc.lipschitz = cfg.get<double>("lipschitz");
  fc.holder_alpha = cfg.get<double>("holder_alpha", 1.0);
  fc.beta = cfg.get<double>("beta", 0.0);
  if (cfg.has("activation"))
    fc.activation = with_source("config.activation", [&] { return activation_from_json(cfg.json().at("activation")); });
  if (mode == "end2end") {
    if (!cfg.has("activation")) fc.activation = ActivationSpec::classical();
    fc.hidden = cfg.get<std::vector<int>>("hidden", fc.hidden);
    fc.feature_gain = cfg.get<double>("feature_gain", 0.0);
    fc.pretrain.seed = run.seed();
  }

  const auto Ns = cfg.get<std::vector<int>>("N", {4, 8, 16, 32});
  const auto qs = cfg.get<std::vector<int>>("q", {2});
  Json runs = Json::array();
  std::vector<std::vector<std::string>> rows;
  Json model;
  Stopwatch sw;
  for (int N : Ns)
    for (int q : qs) {
      const auto res = mode == "constructive" ? fit_static_constructive(target.f, train, target.space, N, q, fc)
                                              : fit_static_end2end(target.f, train, target.space, N, q, fc);
      runs.push_back({{"N", N}, {"q", q}, {"report", to_json(res.report)}});
      rows.push_back({std::to_string(N), std::to_string(q), fmt_double(res.report.sup_error),
                      fmt_double(res.report.covering_radius), fmt_double(res.report.bound),
                      res.report.bound_holds ? "1" : "0"});
      model = to_json(res.gt);
    }
  run.time("fit", sw.seconds());
  run.write_json("static_fit.json", {{"mode", mode}, {"space", to_json(target.space)}, {"runs", runs}});
  run.write_csv("static_curve.csv", {"N", "q", "sup_error", "covering_radius", "bound", "bound_holds"}, rows);
  if (cfg.get<bool>("write_model", false)) run.write_json("static_model.json", model);
  return 0;
}

// ---------------------------------------------------------------- dynamic-fit

namespace {

std::function<double(double, double)> drift_by_name(const std::string& name, double a, double b) {
  if (name == "zero") return [](double, double) { return 0.0; };
  if (name == "sine") return [a](double t, double x) { return a * std::sin(t + x); };
  if (name == "ou") return [a](double, double x) { return -a * x; };
  if (name == "linear") return [a, b](double, double x) { return a * x + b; };
  throw DomainError("unknown drift \"" + name + "\"");
}

FiniteComplexityMap dynamic_target(const Config& t, int quantiles) {
  t.allow({"kind", "drift", "drift_scale", "drift_offset", "sigma", "step", "value"});
  const auto kind = t.get<std::string>("kind", "sde_kernel");
  const double sigma = t.get<double>("sigma", 0.2), step = t.get<double>("step", 1.0);
  if (!(sigma > 0.0)) throw DomainError("config.target: \"sigma\" must be positive");
  if (kind == "sde_kernel") {
    const auto mu = drift_by_name(t.get<std::string>("drift", "sine"), t.get<double>("drift_scale", 0.1),
                                  t.get<double>("drift_offset", 0.0));
    return sde_kernel_map([mu](double tt, const Vec& x) { return Vec{mu(tt, x[0])}; },
                          [sigma](double, const Vec&) { return Eigen::MatrixXd::Constant(1, 1, sigma); }, step,
                          DiscreteMeasure::dirac({0.0}), quantiles);
  }
  if (kind == "constant") {
    auto map = sde_kernel_map([](double, const Vec&) { return Vec{0.0}; },
                              [sigma](double, const Vec&) { return Eigen::MatrixXd::Constant(1, 1, sigma); }, step,
                              DiscreteMeasure::dirac({0.0}), quantiles);
    const double v = t.get<double>("value", 0.0), s = std::sqrt(step) * sigma;
    map.f = [v, s](double, const Vec&) { return Vec{v, s}; };
    map.time_homogeneous = true;
    return map;
  }
  throw DomainError("config.target: unknown \"kind\" \"" + kind + "\"");
}

std::vector<PathWindow> load_paths(const Run& run, const Config& p, std::uint64_t seed) {
  if (p.has("file")) {
    p.allow({"file"});
    const auto path = resolve(run, p.get<std::string>("file"));
    const Json j = read_json_file(path);
    if (!j.is_array()) throw DomainError(path.string() + ": expected an array of paths");
    std::vector<PathWindow> out;
    for (const auto& e : j) out.push_back(with_source(path.string(), [&] { return path_from_json(e); }));
    if (out.empty()) throw DomainError(path.string() + ": no paths");
    return out;
  }
  p.allow({"count", "lower", "upper", "first", "last"});
  const int count = p.get<int>("count");
  const double lo = p.get<double>("lower", -1.0), hi = p.get<double>("upper", 1.0);
  if (count < 1 || !(hi >= lo)) throw DomainError("config.paths: need count >= 1 and lower <= upper");
  const TimeGrid g = unit_grid(p.get<int>("first"), p.get<int>("last"));
  Rng rng(seed);
  std::vector<PathWindow> out;
  for (int i = 0; i < count; ++i) {
    std::vector<Vec> v;
    for (std::size_t k = 0; k < g.times.size(); ++k) v.push_back({rng.uniform(lo, hi)});
    out.push_back(make_window(g, v));
  }
  return out;
}

}  // namespace

int cmd_dynamic_fit(Run& run) {
  const Config& cfg = run.config();
  cfg.allow({"seed", "threads", "out", "tolerances", "target", "quantiles", "paths", "N_T", "T", "eps",
             "encoder_hidden", "encoder_gain", "decoder_N", "decoder_q", "decoder_lipschitz", "holder_alpha",
             "perturb_retries", "oracle_quantiles", "normalized", "write_model"});
  double replay_tol = 1e-6;
  if (cfg.has("tolerances")) {
    const Config tol = cfg.child("tolerances");
    tol.allow({"replay"});
    replay_tol = tol.get<double>("replay", replay_tol);
  }
  const std::uint64_t seed = run.seed();
  const int quantiles = cfg.get<int>("quantiles", 8);
  const auto target = dynamic_target(cfg.child("target"), quantiles);
  const auto paths = load_paths(run, cfg.child("paths"), seed);
  const double eps = cfg.get<double>("eps");
  if (cfg.has("N_T") == cfg.has("T")) throw DomainError("config: give exactly one of \"N_T\" or \"T\"");
  const int N_T = cfg.has("N_T") ? cfg.get<int>("N_T") : horizon_index(paths.front().grid, cfg.get<double>("T"));

  DynamicFitConfig dc;
  dc.encoder_hidden = cfg.get<std::vector<int>>("encoder_hidden", dc.encoder_hidden);
  dc.encoder_gain = cfg.get<double>("encoder_gain", dc.encoder_gain);
  dc.decoder_N = cfg.get<int>("decoder_N", dc.decoder_N);
  dc.decoder_q = cfg.get<int>("decoder_q", dc.decoder_q);
  dc.decoder_lipschitz = cfg.get<double>("decoder_lipschitz", dc.decoder_lipschitz);
  dc.holder_alpha = cfg.get<double>("holder_alpha", dc.holder_alpha);
  dc.perturb_retries = cfg.get<int>("perturb_retries", dc.perturb_retries);
  dc.seed = seed;
  dc.threads = run.threads();

  Stopwatch sw;
  const auto res = fit_dynamic(target, paths, N_T, eps, dc);
  run.time("fit", sw.seconds());
  Json report = to_json(res.report);

  if (cfg.has("oracle_quantiles")) {
    Stopwatch so;
    const auto oracle = dynamic_target(cfg.child("target"), cfg.get<int>("oracle_quantiles"));
    Vec per_n(2 * static_cast<std::size_t>(N_T) + 1, 0.0);
    for (int n = -N_T; n <= N_T; ++n)
      for (const auto& p : paths)
        per_n[n + N_T] = std::max(per_n[n + N_T], distance(target.space, eval_finite_complexity(oracle, p, n),
                                                           ght_eval(res.ght, p, n)));
    report["oracle_errors"] = per_n;
    report["oracle_within_sup"] = *std::max_element(per_n.begin(), per_n.end());
    run.time("oracle", so.seconds());
  }

  if (cfg.has("normalized")) {
    const Config nc = cfg.child("normalized");
    nc.allow({"row", "L_rho", "L_f", "diam_K", "c_ac", "lambda", "C", "p", "class_alpha", "paths"});
    Table3Params tp;
    tp.eps = eps;
    tp.L_rho = nc.get<double>("L_rho", 1.0);
    tp.L_f = nc.get<double>("L_f", 1.0);
    tp.holder_alpha = dc.holder_alpha;
    tp.m = target.memory;
    tp.d = target.input_dim;
    tp.delta_plus = paths.front().grid.delta_plus;
    tp.N_T = N_T;
    tp.diam_K = nc.get<double>("diam_K", 2.0);
    tp.C = nc.get<double>("C", 1.0);
    tp.p = nc.get<double>("p", 1.0);
    tp.class_alpha = nc.get<double>("class_alpha", -1.0);
    const auto row = with_source("config.normalized.row",
                                 [&] { return table3_row_from_string(nc.get<std::string>("row", "KZ")); });
    const double c_ac = nc.get<double>("c_ac", 1.0);
    const auto eval_paths = nc.has("paths") ? load_paths(run, nc.child("paths"), seed + 1) : paths;
    Stopwatch sn;
    const auto ne = normalized_error(
        as_causal(target), res.ght, eval_paths, [c_ac](int) { return c_ac; },
        [row, tp](int n) { return compression_rate_table3(row, tp, n); }, N_T, eps, target.memory,
        nc.get<double>("lambda", 0.0), run.threads());
    run.time("normalized", sn.seconds());
    std::vector<std::vector<std::string>> rows;
    for (const auto& r : ne.rows)
      rows.push_back({std::to_string(r.n), fmt_double(r.raw), fmt_double(r.denominator), fmt_double(r.normalized)});
    run.write_csv("dynamic_errors.csv", {"n", "raw_error", "denominator", "normalized_error"}, rows);
    report["normalized_error"] = ne.value;
    report["raw_sup"] = ne.raw_sup;
    report["table3_row"] = to_string(row);
  } else {
    std::vector<std::vector<std::string>> rows;
    for (int n = -N_T; n <= N_T; ++n)
      rows.push_back({std::to_string(n), fmt_double(res.report.within_errors[n + N_T])});
    run.write_csv("dynamic_errors.csv", {"n", "raw_error"}, rows);
  }

  run.write_json("dynamic_fit.json", report);
  if (cfg.get<bool>("write_model", false)) run.write_json("ght_model.json", to_json(res.ght));
  if (res.report.replay_deviation > replay_tol)
    throw NumericError("hypernetwork replay deviation " + fmt_double(res.report.replay_deviation) +
                       " exceeds tolerances.replay");
  return 0;
}

// ---------------------------------------------------------------- paths

namespace {

Region region_from(const Config& c) {
  c.allow({"lower", "upper", "center", "radius"});
  if (c.has("center")) return Region::ball(c.get<Vec>("center"), c.get<double>("radius"));
  return Region::box(c.get<Vec>("lower"), c.get<Vec>("upper"));
}

std::pair<std::string, PathClassSpec> class_from(const Config& c) {
  const auto kind = c.get<std::string>("class");
  const auto name = c.get<std::string>("name", kind);
  if (kind == "KZ") {
    c.allow({"class", "name", "K"});
    return {name, KZ{region_from(c.child("K"))}};
  }
  if (kind == "KInf") {
    c.allow({"class", "name", "K", "C", "p"});
    return {name, KInf{region_from(c.child("K")), c.get<double>("C"), c.get<double>("p")}};
  }
  if (kind == "KAlpha") {
    c.allow({"class", "name", "K", "C", "p", "alpha"});
    return {name, KAlpha{region_from(c.child("K")), c.get<double>("C"), c.get<double>("p"), c.get<double>("alpha")}};
  }
  if (kind == "KW") {
    c.allow({"class", "name", "K", "w_intercept", "w_slope"});
    const double a = c.get<double>("w_intercept", 0.0), b = c.get<double>("w_slope");
    return {name, KW{region_from(c.child("K")), [a, b](int n) { return a + b * n; }}};
  }
  throw DomainError(c.json().dump() + ": unknown \"class\" \"" + kind + "\"");
}

}  // namespace

int cmd_paths(Run& run) {
  const Config& cfg = run.config();
  cfg.allow({"seed", "threads", "out", "tolerances", "sde", "x0", "grid", "count", "eps", "classes", "write_paths"});
  if (cfg.has("tolerances")) cfg.child("tolerances").allow({});
  const Config sde = cfg.child("sde");
  sde.allow({"drift", "theta", "offset", "sigma", "dim"});
  const int d = sde.get<int>("dim", 1);
  if (d < 1) throw DomainError("config.sde: \"dim\" must be positive");
  const auto mu = drift_by_name(sde.get<std::string>("drift", "ou"), sde.get<double>("theta", 1.0),
                                sde.get<double>("offset", 0.0));
  const double sigma = sde.get<double>("sigma", 0.5);
  if (!(sigma >= 0.0)) throw DomainError("config.sde: \"sigma\" must be nonnegative");
  const Config x0c = cfg.child("x0");
  x0c.allow({"mean", "sd"});
  const InitialCondition x0{x0c.get<Vec>("mean", Vec(static_cast<std::size_t>(d), 0.0)), x0c.get<double>("sd", 0.0)};
  if (static_cast<int>(x0.mean.size()) != d) throw DomainError("config.x0: \"mean\" length differs from sde.dim");
  const Config gc = cfg.child("grid");
  gc.allow({"step", "horizon"});
  const int H = gc.get<int>("horizon");
  const double step = gc.get<double>("step", 1.0);
  const TimeGrid grid = uniform_grid(0, H, step);

  Stopwatch sw;
  const auto paths = euler_simulate(
      [mu](double t, const Vec& x) {
        Vec out(x.size());
        for (std::size_t k = 0; k < x.size(); ++k) out[k] = mu(t, x[k]);
        return out;
      },
      [sigma, d](double, const Vec&) { return Eigen::MatrixXd(sigma * Eigen::MatrixXd::Identity(d, d)); }, x0, grid, H,
      cfg.get<int>("count"), run.seed(), run.threads());
  run.time("simulate", sw.seconds());

  const auto fit = fit_exp_envelope(paths, cfg.get<double>("eps", 0.1));
  std::vector<std::vector<std::string>> env;
  for (int n = 0; n <= H; ++n)
    env.push_back({std::to_string(n), fmt_double(fit.second_moments[n]), fmt_double(fit.spec.C[n]),
                   n == 0 ? fmt_double(fit.spec.C0) : fmt_double(exp_envelope(fit.spec, n))});
  run.write_csv("envelope.csv", {"n", "second_moment", "C_n", "envelope"}, env);

  std::vector<std::pair<std::string, PathClassSpec>> classes{{"KExp_fitted", fit.spec}};
  if (cfg.has("classes"))
    for (const auto& c : cfg.children("classes")) {
      classes.push_back(class_from(c));
      validate(classes.back().second);
    }
  std::vector<std::vector<std::string>> contain, member;
  for (const auto& [name, spec] : classes) {
    std::size_t inside = 0;
    for (std::size_t i = 0; i < paths.size(); ++i) {
      const auto rep = path_membership(spec, paths[i]);
      inside += rep.member ? 1 : 0;
      for (const auto& [idx, slack] : rep.slacks)
        member.push_back({std::to_string(i), name, std::to_string(idx), fmt_double(slack)});
    }
    contain.push_back({name, class_name(spec), std::to_string(inside), std::to_string(paths.size()),
                       fmt_double(static_cast<double>(inside) / static_cast<double>(paths.size()))});
  }
  run.write_csv("containment.csv", {"name", "class", "members", "paths", "containment"}, contain);
  run.write_csv("membership.csv", {"path", "class", "index", "slack"}, member);
  run.write_json("envelope_fit.json", {{"C0", fit.spec.C0},
                                       {"C_star", fit.spec.C_star},
                                       {"C", fit.spec.C},
                                       {"eps", fit.spec.eps},
                                       {"delta_minus", fit.spec.delta_minus},
                                       {"scale", fit.scale},
                                       {"containment", fit.containment}});
  if (cfg.get<bool>("write_paths", false)) {
    Json arr = Json::array();
    for (const auto& p : paths) arr.push_back(to_json(p));
    run.write_json("paths.json", arr);
  }
  return 0;
}

}  // namespace ght::cli
