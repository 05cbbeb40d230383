// Copyright 2026 The ConcateNet Authors
// License: Apache 2.0 (http://www.apache.org/licenses/LICENSE-2.0)

#include "concatenet/config.hpp"

#include <charconv>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <functional>
#include <iomanip>
#include <istream>
#include <map>
#include <ostream>
#include <set>
#include <sstream>

namespace concatenet {

namespace {

std::string trim(const std::string& s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string::npos) return {};
  const auto e = s.find_last_not_of(" \t\r");
  return s.substr(b, e - b + 1);
}

double parse_double(const std::string& key, const std::string& v) {
  double out = 0.0;
  const auto [ptr, ec] = std::from_chars(v.data(), v.data() + v.size(), out);
  if (ec != std::errc() || ptr != v.data() + v.size() || !std::isfinite(out)) {
    throw ConfigError(key + ": expected a finite number, got '" + v + "'");
  }
  return out;
}

std::uint64_t parse_uint(const std::string& key, const std::string& v) {
  std::uint64_t out = 0;
  const auto [ptr, ec] = std::from_chars(v.data(), v.data() + v.size(), out);
  if (ec != std::errc() || ptr != v.data() + v.size()) {
    throw ConfigError(key + ": expected a non-negative integer, got '" + v + "'");
  }
  return out;
}

bool parse_bool(const std::string& key, const std::string& v) {
  if (v == "true" || v == "1" || v == "yes") return true;
  if (v == "false" || v == "0" || v == "no") return false;
  throw ConfigError(key + ": expected true or false, got '" + v + "'");
}

using Setter = std::function<void(RunConfig&, const std::string&, const std::string&)>;

struct Field {
  std::string key;
  Setter set;
  std::function<std::string(const RunConfig&)> get;
};

std::string fmt(double v) {
  std::ostringstream os;
  os << std::setprecision(17) << v;
  return os.str();
}

const std::vector<Field>& fields() {
  static const std::vector<Field> table = [] {
    std::vector<Field> f;
    auto sz = [&f](std::string key, auto member) {
      f.push_back({key,
                   [member](RunConfig& c, const std::string& k, const std::string& v) {
                     member(c) = static_cast<std::remove_reference_t<decltype(member(c))>>(parse_uint(k, v));
                   },
                   [member](const RunConfig& c) {
                     return std::to_string(member(const_cast<RunConfig&>(c)));
                   }});
    };
    auto dbl = [&f](std::string key, auto member) {
      f.push_back({key,
                   [member](RunConfig& c, const std::string& k, const std::string& v) {
                     member(c) = parse_double(k, v);
                   },
                   [member](const RunConfig& c) { return fmt(member(const_cast<RunConfig&>(c))); }});
    };
    auto flag = [&f](std::string key, auto member) {
      f.push_back({key,
                   [member](RunConfig& c, const std::string& k, const std::string& v) {
                     member(c) = parse_bool(k, v);
                   },
                   [member](const RunConfig& c) {
                     return std::string(member(const_cast<RunConfig&>(c)) ? "true" : "false");
                   }});
    };
    auto str = [&f](std::string key, auto member) {
      f.push_back({key,
                   [member](RunConfig& c, const std::string&, const std::string& v) { member(c) = v; },
                   [member](const RunConfig& c) { return member(const_cast<RunConfig&>(c)); }});
    };

    sz("channels", [](RunConfig& c) -> auto& { return c.model.channels; });
    sz("bands", [](RunConfig& c) -> auto& { return c.model.bands; });
    sz("depth", [](RunConfig& c) -> auto& { return c.model.depth; });
    sz("nlr_channels", [](RunConfig& c) -> auto& { return c.model.nlr_channels; });
    sz("window_len", [](RunConfig& c) -> auto& { return c.model.window_len; });
    sz("hop", [](RunConfig& c) -> auto& { return c.model.hop; });
    dbl("sample_rate", [](RunConfig& c) -> auto& { return c.model.sample_rate; });
    dbl("f_min", [](RunConfig& c) -> auto& { return c.model.f_min; });
    dbl("f_max", [](RunConfig& c) -> auto& { return c.model.f_max; });
    sz("init_seed", [](RunConfig& c) -> auto& { return c.model.init_seed; });

    dbl("lr", [](RunConfig& c) -> auto& { return c.train.lr; });
    dbl("beta1", [](RunConfig& c) -> auto& { return c.train.beta1; });
    dbl("beta2", [](RunConfig& c) -> auto& { return c.train.beta2; });
    dbl("eps", [](RunConfig& c) -> auto& { return c.train.eps; });
    sz("batch_size", [](RunConfig& c) -> auto& { return c.train.batch_size; });
    dbl("segment_s", [](RunConfig& c) -> auto& { return c.train.segment_s; });
    sz("steps", [](RunConfig& c) -> auto& { return c.train.steps; });
    sz("seed", [](RunConfig& c) -> auto& { return c.train.seed; });
    dbl("snr_low", [](RunConfig& c) -> auto& { return c.train.snr_low_db; });
    dbl("snr_high", [](RunConfig& c) -> auto& { return c.train.snr_high_db; });
    flag("nlr_enabled", [](RunConfig& c) -> auto& { return c.train.nlr_enabled; });
    dbl("grad_clip", [](RunConfig& c) -> auto& { return c.train.grad_clip; });
    dbl("lr_decay", [](RunConfig& c) -> auto& { return c.train.lr_decay; });
    sz("lr_decay_steps", [](RunConfig& c) -> auto& { return c.train.lr_decay_steps; });
    sz("checkpoint_every", [](RunConfig& c) -> auto& { return c.train.checkpoint_every; });

    str("manifest", [](RunConfig& c) -> auto& { return c.manifest; });
    sz("corpus_items", [](RunConfig& c) -> auto& { return c.corpus_items; });
    dbl("corpus_duration_s", [](RunConfig& c) -> auto& { return c.corpus_duration_s; });
    sz("corpus_seed", [](RunConfig& c) -> auto& { return c.corpus_seed; });
    str("output", [](RunConfig& c) -> auto& { return c.output; });
    str("log", [](RunConfig& c) -> auto& { return c.log; });
    return f;
  }();
  return table;
}

const Field* find_field(const std::string& key) {
  for (const auto& f : fields()) {
    if (f.key == key) return &f;
  }
  return nullptr;
}

bool is_path_key(const std::string& key) { return key == "manifest" || key == "output" || key == "log"; }

}  // namespace

void apply_setting(RunConfig& config, const std::string& key, const std::string& value) {
  const Field* f = find_field(key);
  if (!f) throw ConfigError("unknown config key '" + key + "'");
  f->set(config, key, value);
}

const std::vector<std::string>& config_keys() {
  static const std::vector<std::string> keys = [] {
    std::vector<std::string> k;
    for (const auto& f : fields()) k.push_back(f.key);
    return k;
  }();
  return keys;
}

RunConfig parse_config(std::istream& in, const std::string& source, const std::string& base_dir,
                       RunConfig defaults) {
  RunConfig config = std::move(defaults);
  std::set<std::string> seen;
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    const auto hash = line.find('#');
    if (hash != std::string::npos) line.resize(hash);
    line = trim(line);
    if (line.empty()) continue;
    const std::string where = source + ":" + std::to_string(lineno) + ": ";
    const auto eq = line.find('=');
    if (eq == std::string::npos) throw ConfigError(where + "expected 'key = value'");
    const std::string key = trim(line.substr(0, eq));
    std::string value = trim(line.substr(eq + 1));
    if (key.empty()) throw ConfigError(where + "missing key");
    if (!seen.insert(key).second) throw ConfigError(where + "duplicate key '" + key + "'");
    if (is_path_key(key) && !value.empty() && !base_dir.empty()) {
      const std::filesystem::path p(value);
      if (p.is_relative()) value = (std::filesystem::path(base_dir) / p).string();
    }
    try {
      apply_setting(config, key, value);
    } catch (const ConfigError& e) {
      throw ConfigError(where + e.what());
    }
  }
  return config;
}

RunConfig load_config(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open config file " + path);
  const auto dir = std::filesystem::path(path).parent_path().string();
  return parse_config(in, path, dir);
}

void write_config(std::ostream& os, const RunConfig& config) {
  for (const auto& f : fields()) os << f.key << " = " << f.get(config) << '\n';
}

}  // namespace concatenet
