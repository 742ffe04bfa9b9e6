#pragma once

#include <string>

#include "json.hpp"

#include "ght/causal.hpp"
#include "ght/gaussian.hpp"
#include "ght/hypertransformer.hpp"
#include "ght/measures.hpp"
#include "ght/network.hpp"
#include "ght/qas.hpp"
#include "ght/transformer.hpp"

namespace ght {

using Json = nlohmann::json;

// Readers throw DomainError naming the offending key.

// {"dim", "atoms", "weights"}; path measures add "horizon" and store each path
// flattened to dim * horizon entries.
Json to_json(const DiscreteMeasure& m);
Json to_json(const PathMeasure& m);
DiscreteMeasure measure_from_json(const Json& j);
PathMeasure path_measure_from_json(const Json& j);

// {"mean", "cov"}.
Json to_json(const GaussianMeasure& g);
GaussianMeasure gaussian_from_json(const Json& j);

// {"kind": ..., parameters}. Exponential families round-trip only with the
// default statistics.
Json to_json(const QasSpace& s);
QasSpace space_from_json(const Json& j);

Json to_json(const QasPoint& y);
QasPoint point_from_json(const QasSpace& space, const Json& j);

Json to_json(const ActivationSpec& a);
ActivationSpec activation_from_json(const Json& j);
Json to_json(const Network& n);
Network network_from_json(const Json& j);

Json to_json(const GeometricTransformer& gt);
GeometricTransformer transformer_from_json(const Json& j);

Json to_json(const Ght& g);
Ght ght_from_json(const Json& j);

// {"times", "values", "offset"}.
Json to_json(const PathWindow& p);
PathWindow path_from_json(const Json& j);

Json to_json(const FitReport& r);
Json to_json(const DynamicFitReport& r);

// Key lookup helpers used by the config readers.
const Json& require(const Json& j, const std::string& key);
void reject_unknown_keys(const Json& j, std::initializer_list<const char*> allowed, const std::string& where);

}  // namespace ght
