#include "moreau/config.hpp"

#include "moreau/error.hpp"
#include "moreau/toml_lite.hpp"

#include <algorithm>
#include <cstdio>
#include <fstream>
#include <sstream>

namespace moreau::harness {

namespace {

using toml::Table;
using toml::Value;

const Value* find(const toml::Document& doc, const std::string& table, const std::string& key) {
  auto t = doc.find(table);
  if (t == doc.end()) return nullptr;
  auto v = t->second.find(key);
  return v == t->second.end() ? nullptr : &v->second;
}

void reject_unknown(const toml::Document& doc) {
  static const std::vector<std::pair<std::string, std::vector<std::string>>> allowed = {
      {"",
       {"alpha", "repetitions", "base_seed", "seeds", "checks", "output_dir", "snapshot_stride",
        "timing", "variance_probes"}},
      {"suite", {"family", "n", "d", "mu", "L", "spread", "samples_per_task", "reg", "seed"}},
      {"outer", {"method", "beta", "tau", "K", "x0"}},
      {"inner", {"kind", "steps", "delta", "gamma", "delta_ref", "step_cap"}},
  };
  for (const auto& [name, table] : doc) {
    auto it = std::find_if(allowed.begin(), allowed.end(),
                           [&](const auto& a) { return a.first == name; });
    if (it == allowed.end()) throw Error(ErrorCode::kInvalidConfig, "unknown table [" + name + "]");
    for (const auto& [key, value] : table) {
      if (std::find(it->second.begin(), it->second.end(), key) == it->second.end()) {
        throw Error(ErrorCode::kInvalidConfig,
                    "unknown key '" + key + "'" + (name.empty() ? "" : " in [" + name + "]"));
      }
    }
  }
}

int to_int(const Value& v, const char* what) {
  const auto i = v.as_int();
  if (i < INT32_MIN || i > INT32_MAX) {
    throw Error(ErrorCode::kInvalidConfig, std::string(what) + " out of range");
  }
  return static_cast<int>(i);
}

// Seeds are stored as TOML integers; values above 2^63 - 1 wrap to negative.
std::uint64_t to_seed(const Value& v) { return static_cast<std::uint64_t>(v.as_int()); }
Value seed_value(std::uint64_t s) { return Value{static_cast<std::int64_t>(s)}; }

}  // namespace

std::vector<std::uint64_t> ExperimentConfig::repetition_seeds() const {
  if (!seeds.empty()) return seeds;
  std::vector<std::uint64_t> out;
  for (int r = 0; r < repetitions; ++r) out.push_back(base_seed + static_cast<std::uint64_t>(r));
  return out;
}

int ExperimentConfig::repetition_count() const {
  return seeds.empty() ? repetitions : static_cast<int>(seeds.size());
}

void ExperimentConfig::validate() const {
  if (repetition_count() < 1) throw Error(ErrorCode::kInvalidConfig, "repetitions must be >= 1");
  if (!seeds.empty() && repetitions != static_cast<int>(seeds.size())) {
    throw Error(ErrorCode::kInvalidConfig, "repetitions disagrees with the seeds list");
  }
  if (!(alpha > 0.0)) throw Error(ErrorCode::kInvalidConfig, "alpha must be > 0");
  if (suite.n < 1 || suite.d < 1) throw Error(ErrorCode::kInvalidConfig, "suite needs n, d >= 1");
  outer.validate(suite.n);
  if (outer.x0 && outer.x0->size() != suite.d) {
    throw Error(ErrorCode::kInvalidConfig, "outer.x0 length does not match suite.d");
  }
  if (snapshot_stride < 0) throw Error(ErrorCode::kInvalidConfig, "snapshot_stride must be >= 0");
  if (variance_probes < 1) throw Error(ErrorCode::kInvalidConfig, "variance_probes must be >= 1");
  for (const auto& c : checks) {
    if (std::find(std::begin(kKnownChecks), std::end(kKnownChecks), c) == std::end(kKnownChecks)) {
      throw Error(ErrorCode::kInvalidConfig, "unknown check '" + c + "'");
    }
  }
  if (output_dir.empty()) throw Error(ErrorCode::kInvalidConfig, "output_dir must not be empty");
}

ExperimentConfig parse_config(std::string_view toml_text) {
  const toml::Document doc = toml::parse(toml_text);
  reject_unknown(doc);
  ExperimentConfig c;

  if (auto v = find(doc, "", "alpha")) c.alpha = v->as_double();
  if (auto v = find(doc, "", "base_seed")) c.base_seed = to_seed(*v);
  if (auto v = find(doc, "", "seeds")) {
    for (const auto& s : v->as_array()) c.seeds.push_back(to_seed(s));
    c.repetitions = static_cast<int>(c.seeds.size());
  }
  if (auto v = find(doc, "", "repetitions")) c.repetitions = to_int(*v, "repetitions");
  if (auto v = find(doc, "", "checks")) {
    for (const auto& s : v->as_array()) c.checks.push_back(s.as_string());
  }
  if (auto v = find(doc, "", "output_dir")) c.output_dir = v->as_string();
  if (auto v = find(doc, "", "snapshot_stride")) c.snapshot_stride = to_int(*v, "snapshot_stride");
  if (auto v = find(doc, "", "timing")) c.timing = v->as_bool();
  if (auto v = find(doc, "", "variance_probes")) c.variance_probes = to_int(*v, "variance_probes");

  SuiteDescriptor& s = c.suite;
  if (auto v = find(doc, "suite", "family")) s.family = suite_family_from_string(v->as_string());
  if (auto v = find(doc, "suite", "n")) s.n = to_int(*v, "suite.n");
  if (auto v = find(doc, "suite", "d")) s.d = to_int(*v, "suite.d");
  if (auto v = find(doc, "suite", "mu")) s.mu = v->as_double();
  if (auto v = find(doc, "suite", "L")) s.L = v->as_double();
  if (auto v = find(doc, "suite", "spread")) s.spread = v->as_double();
  if (auto v = find(doc, "suite", "samples_per_task")) {
    s.samples_per_task = to_int(*v, "suite.samples_per_task");
  }
  if (auto v = find(doc, "suite", "reg")) s.reg = v->as_double();
  if (auto v = find(doc, "suite", "seed")) s.seed = to_seed(*v);

  OuterSpec& o = c.outer;
  if (auto v = find(doc, "outer", "method")) o.method = method_from_string(v->as_string());
  if (auto v = find(doc, "outer", "beta")) o.beta = v->as_double();
  if (auto v = find(doc, "outer", "tau")) o.tau = to_int(*v, "outer.tau");
  if (auto v = find(doc, "outer", "K")) o.K = to_int(*v, "outer.K");
  if (auto v = find(doc, "outer", "x0")) {
    const auto& a = v->as_array();
    Vector x0(static_cast<Eigen::Index>(a.size()));
    for (std::size_t i = 0; i < a.size(); ++i) x0[static_cast<Eigen::Index>(i)] = a[i].as_double();
    o.x0 = x0;
  }
  o.seed = c.base_seed;

  InnerSolverSpec& in = o.inner;
  if (auto v = find(doc, "inner", "kind")) in.kind = inner_kind_from_string(v->as_string());
  if (auto v = find(doc, "inner", "steps")) in.steps = to_int(*v, "inner.steps");
  if (auto v = find(doc, "inner", "delta")) in.delta = v->as_double();
  if (auto v = find(doc, "inner", "gamma")) in.gamma = v->as_double();
  if (auto v = find(doc, "inner", "delta_ref")) in.delta_ref = v->as_double();
  if (auto v = find(doc, "inner", "step_cap")) in.step_cap = to_int(*v, "inner.step_cap");

  c.validate();
  return c;
}

std::string serialize_config(const ExperimentConfig& c) {
  toml::Document doc;
  Table& root = doc[""];
  root["alpha"] = Value{c.alpha};
  root["repetitions"] = Value{static_cast<std::int64_t>(c.repetitions)};
  root["base_seed"] = seed_value(c.base_seed);
  if (!c.seeds.empty()) {
    toml::Array a;
    for (auto s : c.seeds) a.push_back(seed_value(s));
    root["seeds"] = Value{a};
  }
  toml::Array checks;
  for (const auto& s : c.checks) checks.push_back(Value{s});
  root["checks"] = Value{checks};
  root["output_dir"] = Value{c.output_dir};
  root["snapshot_stride"] = Value{static_cast<std::int64_t>(c.snapshot_stride)};
  root["timing"] = Value{c.timing};
  root["variance_probes"] = Value{static_cast<std::int64_t>(c.variance_probes)};

  Table& s = doc["suite"];
  s["family"] = Value{std::string(to_string(c.suite.family))};
  s["n"] = Value{static_cast<std::int64_t>(c.suite.n)};
  s["d"] = Value{static_cast<std::int64_t>(c.suite.d)};
  s["mu"] = Value{c.suite.mu};
  s["L"] = Value{c.suite.L};
  s["spread"] = Value{c.suite.spread};
  s["samples_per_task"] = Value{static_cast<std::int64_t>(c.suite.samples_per_task)};
  s["reg"] = Value{c.suite.reg};
  s["seed"] = seed_value(c.suite.seed);

  Table& o = doc["outer"];
  o["method"] = Value{std::string(to_string(c.outer.method))};
  o["beta"] = Value{c.outer.beta};
  o["tau"] = Value{static_cast<std::int64_t>(c.outer.tau)};
  o["K"] = Value{static_cast<std::int64_t>(c.outer.K)};
  if (c.outer.x0) {
    toml::Array a;
    for (Eigen::Index i = 0; i < c.outer.x0->size(); ++i) a.push_back(Value{(*c.outer.x0)[i]});
    o["x0"] = Value{a};
  }

  Table& in = doc["inner"];
  const InnerSolverSpec& spec = c.outer.inner;
  in["kind"] = Value{std::string(to_string(spec.kind))};
  in["steps"] = Value{static_cast<std::int64_t>(spec.steps)};
  in["delta"] = Value{spec.delta};
  if (spec.gamma) in["gamma"] = Value{*spec.gamma};
  in["delta_ref"] = Value{spec.delta_ref};
  in["step_cap"] = Value{static_cast<std::int64_t>(spec.step_cap)};

  return toml::serialize(doc);
}

ExperimentConfig load_config(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorCode::kIo, "cannot read " + path.string());
  std::ostringstream os;
  os << in.rdbuf();
  return parse_config(os.str());
}

std::string config_hash(const ExperimentConfig& config) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char ch : serialize_config(config)) {
    h ^= ch;
    h *= 0x100000001b3ULL;
  }
  char buf[17];
  std::snprintf(buf, sizeof(buf), "%016llx", static_cast<unsigned long long>(h));
  return buf;
}

}  // namespace moreau::harness
