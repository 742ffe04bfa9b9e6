#include "ght/serialize.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <set>

#include "ght/errors.hpp"

namespace ght {

namespace {

template <class... Ts>
struct overloaded : Ts... {
  using Ts::operator()...;
};
template <class... Ts>
overloaded(Ts...) -> overloaded<Ts...>;

template <class T>
T get(const Json& j, const std::string& key) {
  const Json& v = require(j, key);
  try {
    return v.get<T>();
  } catch (const Json::exception&) {
    throw DomainError("invalid value for key \"" + key + "\"");
  }
}

template <class T>
T get_or(const Json& j, const std::string& key, T fallback) {
  return j.contains(key) ? get<T>(j, key) : fallback;
}

Json matrix_to_json(const Eigen::MatrixXd& m) {
  Json rows = Json::array();
  for (Eigen::Index r = 0; r < m.rows(); ++r) {
    Vec row(static_cast<std::size_t>(m.cols()));
    for (Eigen::Index c = 0; c < m.cols(); ++c) row[static_cast<std::size_t>(c)] = m(r, c);
    rows.push_back(row);
  }
  return rows;
}

Eigen::MatrixXd matrix_from_json(const Json& j, const std::string& key) {
  const auto rows = get<std::vector<Vec>>(j, key);
  const auto n = static_cast<Eigen::Index>(rows.size());
  Eigen::MatrixXd m(n, n);
  for (Eigen::Index r = 0; r < n; ++r) {
    if (static_cast<Eigen::Index>(rows[static_cast<std::size_t>(r)].size()) != n)
      throw DomainError("key \"" + key + "\" must be a square matrix");
    for (Eigen::Index c = 0; c < n; ++c) m(r, c) = rows[static_cast<std::size_t>(r)][static_cast<std::size_t>(c)];
  }
  return m;
}

Json code_to_json(const QuantizationCode& c) { return {{"z", c.z}, {"q", c.q}}; }

QuantizationCode code_from_json(const Json& j) {
  reject_unknown_keys(j, {"z", "q"}, "code");
  return {get<Vec>(j, "z"), get<int>(j, "q")};
}

}  // namespace

const Json& require(const Json& j, const std::string& key) {
  if (!j.is_object()) throw DomainError("expected a JSON object holding key \"" + key + "\"");
  const auto it = j.find(key);
  if (it == j.end()) throw DomainError("missing key \"" + key + "\"");
  return *it;
}

void reject_unknown_keys(const Json& j, std::initializer_list<const char*> allowed, const std::string& where) {
  if (!j.is_object()) throw DomainError(where + ": expected a JSON object");
  for (auto it = j.begin(); it != j.end(); ++it) {
    if (std::none_of(allowed.begin(), allowed.end(), [&](const char* a) { return it.key() == a; }))
      throw DomainError(where + ": unknown key \"" + it.key() + "\"");
  }
}

Json to_json(const DiscreteMeasure& m) {
  return {{"dim", m.dim()}, {"atoms", m.atoms()}, {"weights", m.weights()}};
}

Json to_json(const PathMeasure& m) {
  return {{"dim", m.step_dim()}, {"horizon", m.horizon()}, {"atoms", m.base().atoms()}, {"weights", m.base().weights()}};
}

DiscreteMeasure measure_from_json(const Json& j) {
  reject_unknown_keys(j, {"dim", "atoms", "weights", "horizon"}, "measure");
  const auto dim = get<std::size_t>(j, "dim");
  const auto horizon = get_or<std::size_t>(j, "horizon", 1);
  return DiscreteMeasure(dim * horizon, get<std::vector<Vec>>(j, "atoms"), get<Vec>(j, "weights"));
}

PathMeasure path_measure_from_json(const Json& j) {
  const auto dim = get<std::size_t>(j, "dim");
  const auto horizon = get_or<std::size_t>(j, "horizon", 1);
  return PathMeasure(dim, horizon, measure_from_json(j));
}

Json to_json(const GaussianMeasure& g) {
  return {{"mean", Vec(g.mean().data(), g.mean().data() + g.mean().size())}, {"cov", matrix_to_json(g.cov())}};
}

GaussianMeasure gaussian_from_json(const Json& j) {
  reject_unknown_keys(j, {"mean", "cov"}, "gaussian");
  const auto mean = get<Vec>(j, "mean");
  Eigen::MatrixXd cov = matrix_from_json(j, "cov");
  if (static_cast<std::size_t>(cov.rows()) != mean.size()) throw DomainError("gaussian: \"cov\" size differs from \"mean\"");
  return GaussianMeasure(Eigen::Map<const Eigen::VectorXd>(mean.data(), static_cast<Eigen::Index>(mean.size())), cov);
}

Json to_json(const QasSpace& s) {
  return std::visit(
      overloaded{
          [](const WassersteinConvexSpace& w) {
            Json j{{"kind", "wasserstein_convex"}, {"d", w.d}, {"p", w.p}, {"moment", w.moment},
                   {"bounded", w.bounded}, {"barycenter_mixer", w.barycenter_mixer}};
            if (w.bounded) {
              j["lower"] = w.lower;
              j["upper"] = w.upper;
            }
            return j;
          },
          [](const AdaptedEmpiricalSpace& a) {
            return Json{{"kind", "adapted_empirical"}, {"d", a.d}, {"T", a.T}, {"p", a.p}};
          },
          [](const LinearSchauderSpace& l) {
            return Json{{"kind", "linear_schauder"}, {"exponent", l.exponent}, {"weight_decay", l.weight_decay}};
          },
          [](const ForwardRateRkhsSpace& f) {
            return Json{{"kind", "forward_rate_rkhs"}, {"alpha", f.alpha}, {"knots", f.knots}, {"grid", f.grid}};
          },
          [](const GaussianSpdSpace& g) { return Json{{"kind", "gaussian_spd"}, {"d", g.d}}; },
          [](const ExponentialFamilySpace& e) {
            if (!e.statistics.empty())
              throw DomainError("exponential_family: custom statistics cannot be serialized");
            return Json{{"kind", "exponential_family"}, {"d", e.d}};
          }},
      s);
}

QasSpace space_from_json(const Json& j) {
  const auto kind = get<std::string>(j, "kind");
  if (kind == "wasserstein_convex") {
    reject_unknown_keys(j, {"kind", "d", "p", "moment", "bounded", "lower", "upper", "barycenter_mixer"}, "space");
    const bool bounded = get_or<bool>(j, "bounded", false);
    return make_wasserstein_convex(get<int>(j, "d"), get_or<double>(j, "p", 1.0), get_or<double>(j, "moment", 2.0),
                                   bounded, bounded ? get<Vec>(j, "lower") : Vec{},
                                   bounded ? get<Vec>(j, "upper") : Vec{}, get_or<bool>(j, "barycenter_mixer", false));
  }
  if (kind == "adapted_empirical") {
    reject_unknown_keys(j, {"kind", "d", "T", "p"}, "space");
    return make_adapted_empirical(get<int>(j, "d"), get<int>(j, "T"), get_or<double>(j, "p", 1.0));
  }
  if (kind == "linear_schauder") {
    reject_unknown_keys(j, {"kind", "exponent", "weight_decay"}, "space");
    return make_linear_schauder(get_or<double>(j, "exponent", 2.0), get_or<double>(j, "weight_decay", 0.0));
  }
  if (kind == "forward_rate_rkhs") {
    reject_unknown_keys(j, {"kind", "alpha", "knots", "grid", "horizon"}, "space");
    return make_forward_rate(get<double>(j, "alpha"), get_or<Vec>(j, "knots", {}), get_or<Vec>(j, "grid", {}),
                             get_or<double>(j, "horizon", 30.0));
  }
  if (kind == "gaussian_spd") {
    reject_unknown_keys(j, {"kind", "d"}, "space");
    return make_gaussian_spd(get<int>(j, "d"));
  }
  if (kind == "exponential_family") {
    reject_unknown_keys(j, {"kind", "d"}, "space");
    return make_exponential_family(get<int>(j, "d"));
  }
  throw DomainError("space: unknown \"kind\" \"" + kind + "\"");
}

Json to_json(const QasPoint& y) {
  return std::visit(overloaded{[](const DiscreteMeasure& m) { return to_json(m); },
                               [](const PathMeasure& m) { return to_json(m); },
                               [](const Coefficients& c) { return Json(c.c); },
                               [](const GaussianMeasure& g) { return to_json(g); },
                               [](const NaturalParameter& n) { return Json(n.theta); }},
                    y);
}

QasPoint point_from_json(const QasSpace& space, const Json& j) {
  QasPoint y = std::visit(
      overloaded{[&](const WassersteinConvexSpace&) -> QasPoint { return measure_from_json(j); },
                 [&](const AdaptedEmpiricalSpace&) -> QasPoint { return path_measure_from_json(j); },
                 [&](const LinearSchauderSpace&) -> QasPoint { return Coefficients{j.get<Vec>()}; },
                 [&](const ForwardRateRkhsSpace&) -> QasPoint { return Coefficients{j.get<Vec>()}; },
                 [&](const GaussianSpdSpace&) -> QasPoint { return gaussian_from_json(j); },
                 [&](const ExponentialFamilySpace&) -> QasPoint { return NaturalParameter{j.get<Vec>()}; }},
      space);
  check_point(space, y);
  return y;
}

Json to_json(const ActivationSpec& a) {
  return {{"kind", to_string(a.kind)}, {"sigma", a.sigma}, {"leak", a.leak}};
}

ActivationSpec activation_from_json(const Json& j) {
  reject_unknown_keys(j, {"kind", "sigma", "leak"}, "activation");
  const auto kind = activation_kind_from_string(get<std::string>(j, "kind"));
  switch (kind) {
    case ActivationKind::Singular:
      return ActivationSpec::singular();
    case ActivationKind::Smooth:
      return ActivationSpec::smooth(get_or<std::string>(j, "sigma", "sigmoid"));
    case ActivationKind::Classical:
      return ActivationSpec::classical(get_or<std::string>(j, "sigma", "leaky_relu"), get_or<double>(j, "leak", 0.01));
  }
  throw DomainError("activation: unknown kind");
}

Json to_json(const Network& n) {
  return {{"dims", n.md.dims()}, {"activation", to_json(n.act)}, {"theta", n.theta}};
}

Network network_from_json(const Json& j) {
  reject_unknown_keys(j, {"dims", "activation", "theta"}, "network");
  Network n{MultiIndex(get<std::vector<int>>(j, "dims")), activation_from_json(require(j, "activation")),
            get<Vec>(j, "theta")};
  if (n.theta.size() != param_count(n.md)) throw DomainError("network: \"theta\" length differs from the parameter count");
  return n;
}

Json to_json(const GeometricTransformer& gt) {
  Json codes = Json::array();
  for (const auto& c : gt.codes) codes.push_back(code_to_json(c));
  return {{"space", to_json(gt.space)}, {"encoder", to_json(gt.encoder)}, {"codes", codes}, {"q", gt.q}};
}

GeometricTransformer transformer_from_json(const Json& j) {
  reject_unknown_keys(j, {"space", "encoder", "codes", "q"}, "transformer");
  GeometricTransformer gt{space_from_json(require(j, "space")), network_from_json(require(j, "encoder")), {},
                          get<int>(j, "q")};
  for (const auto& c : require(j, "codes")) gt.codes.push_back(code_from_json(c));
  validate(gt);
  return gt;
}

Json to_json(const Ght& g) {
  return {{"decoder", to_json(g.decoder)},
          {"hypernetwork", to_json(g.hyper)},
          {"theta_init", g.theta_init},
          {"horizon", g.horizon},
          {"encoder", {{"dims", g.encoder_md.dims()}, {"activation", to_json(g.encoder_act)}}},
          {"memory", g.memory},
          {"input_dim", g.input_dim}};
}

Ght ght_from_json(const Json& j) {
  reject_unknown_keys(j, {"decoder", "hypernetwork", "theta_init", "horizon", "encoder", "memory", "input_dim"}, "ght");
  const Json& enc = require(j, "encoder");
  reject_unknown_keys(enc, {"dims", "activation"}, "ght encoder");
  return make_ght(transformer_from_json(require(j, "decoder")), network_from_json(require(j, "hypernetwork")),
                  get<Vec>(j, "theta_init"), get<int>(j, "horizon"), MultiIndex(get<std::vector<int>>(enc, "dims")),
                  activation_from_json(require(enc, "activation")), get<int>(j, "memory"), get<int>(j, "input_dim"));
}

Json to_json(const PathWindow& p) {
  return {{"times", p.grid.times}, {"values", p.values}, {"offset", p.offset()}};
}

PathWindow path_from_json(const Json& j) {
  reject_unknown_keys(j, {"times", "values", "offset"}, "path");
  TimeGrid g;
  g.times = get<Vec>(j, "times");
  g.first = get<int>(j, "offset");
  if (g.times.empty()) throw DomainError("path: \"times\" is empty");
  for (std::size_t i = 1; i < g.times.size(); ++i)
    if (!(g.times[i] > g.times[i - 1])) throw DomainError("path: \"times\" must be strictly increasing");
  if (g.contains(0) && g.t(0) != 0.0) throw DomainError("path: time at index 0 must be 0 (check \"offset\")");
  if (g.times.size() > 1) {
    g.delta_minus = std::numeric_limits<double>::infinity();
    for (std::size_t i = 1; i < g.times.size(); ++i) {
      g.delta_minus = std::min(g.delta_minus, g.times[i] - g.times[i - 1]);
      g.delta_plus = std::max(g.delta_plus, g.times[i] - g.times[i - 1]);
    }
  }
  return make_window(g, get<std::vector<Vec>>(j, "values"));
}

Json to_json(const FitReport& r) {
  return {{"N", r.N},
          {"q", r.q},
          {"centers", r.centers},
          {"center_points", r.center_points},
          {"covering_radius", r.covering_radius},
          {"quantization_errors", r.quantization_errors},
          {"center_errors", r.center_errors},
          {"sup_error", r.sup_error},
          {"mean_loss", r.mean_loss},
          {"classification_defect", r.classification_defect},
          {"lipschitz", r.lipschitz},
          {"holder_alpha", r.holder_alpha},
          {"bound", r.bound},
          {"bound_holds", r.bound_holds},
          {"beta", r.beta}};
}

Json to_json(const DynamicFitReport& r) {
  return {{"N_T", r.N_T},
          {"P", r.P},
          {"hyper_width", r.hyper_width},
          {"hyper_width_formula", r.hyper_width_formula},
          {"hyper_residual", r.hyper_residual},
          {"perturbation", r.perturbation},
          {"perturb_attempts", r.perturb_attempts},
          {"distinct_before", r.distinct_before},
          {"encoder_errors", r.encoder_errors},
          {"within_errors", r.within_errors},
          {"within_sup", r.within_sup},
          {"decoder", to_json(r.decoder)},
          {"replay_deviation", r.replay_deviation}};
}

}  // namespace ght
