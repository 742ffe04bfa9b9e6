#include "harness.hpp"

#include <charconv>
#include <cstdio>
#include <fstream>
#include <iostream>
#include <sstream>

#include "ght/errors.hpp"

#ifndef GHT_VERSION
#define GHT_VERSION "0.0.0"
#endif

namespace ght::cli {

Config Config::child(const std::string& key) const {
  const Json& v = require(j_, key);
  if (!v.is_object()) throw DomainError(where_ + ": key \"" + key + "\" must be an object");
  return Config(v, where_ + "." + key);
}

std::vector<Config> Config::children(const std::string& key) const {
  const Json& v = require(j_, key);
  if (!v.is_array()) throw DomainError(where_ + ": key \"" + key + "\" must be an array");
  std::vector<Config> out;
  for (std::size_t i = 0; i < v.size(); ++i) out.emplace_back(v[i], where_ + "." + key + "[" + std::to_string(i) + "]");
  return out;
}

std::vector<double> Config::list(const std::string& key) const {
  const Json& v = require(j_, key);
  if (v.is_number()) return {v.get<double>()};
  return get<std::vector<double>>(key);
}

std::uint64_t fnv1a(const std::string& bytes) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char c : bytes) {
    h ^= c;
    h *= 0x100000001b3ULL;
  }
  return h;
}

std::string fmt_double(double x) {
  char buf[64];
  const auto res = std::to_chars(buf, buf + sizeof(buf), x);
  return std::string(buf, res.ptr);
}

namespace {

std::string csv_field(const std::string& s) {
  if (s.find_first_of(",\"\n") == std::string::npos) return s;
  std::string q = "\"";
  for (char c : s) q += (c == '"') ? std::string("\"\"") : std::string(1, c);
  return q + "\"";
}

}  // namespace

Run::Run(std::string command, const RunOptions& opt)
    : command_(std::move(command)), opt_(opt), config_(Json::object(), "config"),
      start_(std::chrono::steady_clock::now()) {
  std::ifstream in(opt.config_path);
  if (!in) throw DomainError("config: cannot open " + opt.config_path.string());
  try {
    effective_ = Json::parse(in);
  } catch (const Json::parse_error& e) {
    throw DomainError("config: malformed JSON in " + opt.config_path.string() + ": " + e.what());
  }
  if (!effective_.is_object()) throw DomainError("config: top level must be an object");
  if (opt.seed) effective_["seed"] = *opt.seed;
  config_ = Config(effective_, "config");
  config_dir_ = opt.config_path.parent_path();
  threads_ = config_.get<int>("threads", 1);
  if (threads_ < 1) throw DomainError("config: \"threads\" must be at least 1");
  if (opt_.out_dir.empty()) {
    const std::filesystem::path o(config_.get<std::string>("out", "ght_out"));
    opt_.out_dir = config_.has("out") && o.is_relative() ? config_dir_ / o : o;
  }
  std::filesystem::create_directories(opt_.out_dir);
}

std::uint64_t Run::seed() const {
  if (!config_.has("seed")) throw DomainError("config: key \"seed\" is required for this command");
  const auto s = config_.get<std::int64_t>("seed");
  if (s < 0) throw DomainError("config: \"seed\" must be nonnegative");
  return static_cast<std::uint64_t>(s);
}

void Run::stamp_default(const std::string& what) {
  defaults_.push_back(what);
  std::cerr << "warning: " << what << "\n";
}

void Run::write_csv(const std::string& name, const std::vector<std::string>& header,
                    const std::vector<std::vector<std::string>>& rows) {
  std::ofstream out(opt_.out_dir / name, std::ios::binary);
  if (!out) throw DomainError("cannot write " + (opt_.out_dir / name).string());
  auto line = [&](const std::vector<std::string>& cells) {
    for (std::size_t i = 0; i < cells.size(); ++i) out << (i ? "," : "") << csv_field(cells[i]);
    out << "\n";
  };
  line(header);
  for (const auto& r : rows) line(r);
  files_.push_back(name);
}

void Run::write_json(const std::string& name, const Json& j) {
  std::ofstream out(opt_.out_dir / name, std::ios::binary);
  if (!out) throw DomainError("cannot write " + (opt_.out_dir / name).string());
  out << j.dump(2) << "\n";
  files_.push_back(name);
}

void Run::finish() {
  char hash[17];
  std::snprintf(hash, sizeof(hash), "%016llx", static_cast<unsigned long long>(fnv1a(effective_.dump())));
  wall_["total"] = std::chrono::duration<double>(std::chrono::steady_clock::now() - start_).count();
  Json m{{"command", command_},
         {"version", GHT_VERSION},
         {"config_hash", std::string(hash)},
         {"threads", threads_},
         {"strict", opt_.strict},
         {"defaults", defaults_},
         {"wall_seconds", wall_},
         {"files", files_}};
  if (config_.has("seed")) m["seed"] = config_.get<std::int64_t>("seed");
  std::ofstream out(opt_.out_dir / "manifest.json", std::ios::binary);
  out << m.dump(2) << "\n";
}

}  // namespace ght::cli
