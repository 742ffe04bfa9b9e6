#pragma once

#include <chrono>
#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "ght/errors.hpp"
#include "ght/serialize.hpp"

namespace ght::cli {

// Values read from the config file; typed lookups throw DomainError naming the key.
class Config {
 public:
  Config(Json j, std::string where) : j_(std::move(j)), where_(std::move(where)) {}

  const Json& json() const { return j_; }
  bool has(const std::string& key) const { return j_.contains(key); }
  void allow(std::initializer_list<const char*> keys) const { reject_unknown_keys(j_, keys, where_); }
  Config child(const std::string& key) const;
  std::vector<Config> children(const std::string& key) const;

  template <class T>
  T get(const std::string& key) const {
    const Json& v = require(j_, key);
    try {
      return v.get<T>();
    } catch (const Json::exception&) {
      throw DomainError(where_ + ": invalid value for key \"" + key + "\"");
    }
  }
  template <class T>
  T get(const std::string& key, T fallback) const {
    return has(key) ? get<T>(key) : fallback;
  }
  // Scalar or array of scalars.
  std::vector<double> list(const std::string& key) const;

 private:
  Json j_;
  std::string where_;
};

struct RunOptions {
  std::filesystem::path config_path;
  std::filesystem::path out_dir;
  std::optional<std::int64_t> seed;
  bool strict = false;
};

std::uint64_t fnv1a(const std::string& bytes);

// Shortest round-trip decimal form.
std::string fmt_double(double x);

class Run {
 public:
  Run(std::string command, const RunOptions& opt);

  const Config& config() const { return config_; }
  const std::filesystem::path& config_dir() const { return config_dir_; }
  bool strict() const { return opt_.strict; }
  int threads() const { return threads_; }
  // Config seed, overridden by --seed; DomainError when neither is given.
  std::uint64_t seed() const;

  // Permissive-mode defaults filled in for unspecified constants.
  void stamp_default(const std::string& what);

  void write_csv(const std::string& name, const std::vector<std::string>& header,
                 const std::vector<std::vector<std::string>>& rows);
  void write_json(const std::string& name, const Json& j);

  // Wall time of a named stage.
  void time(const std::string& stage, double seconds) { wall_[stage] = seconds; }

  void finish();

 private:
  std::string command_;
  RunOptions opt_;
  Json effective_;
  Config config_;
  std::filesystem::path config_dir_;
  int threads_ = 1;
  std::vector<std::string> files_;
  std::vector<std::string> defaults_;
  std::map<std::string, double> wall_;
  std::chrono::steady_clock::time_point start_;
};

class Stopwatch {
 public:
  Stopwatch() : t0_(std::chrono::steady_clock::now()) {}
  double seconds() const { return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0_).count(); }

 private:
  std::chrono::steady_clock::time_point t0_;
};

int cmd_metric(Run& run);
int cmd_complexity(Run& run);
int cmd_static_fit(Run& run);
int cmd_dynamic_fit(Run& run);
int cmd_paths(Run& run);

}  // namespace ght::cli
