#include "cbrw/config.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <map>
#include <sstream>

#include "cbrw/errors.hpp"
#include "cbrw/rng.hpp"

namespace cbrw {
namespace {

// Minimal declarative value tree: scalar (number / string / bool) or array.
struct Value {
  enum Kind { kNumber, kString, kBool, kArray } kind = kNumber;
  double number = 0.0;
  std::string text;
  bool flag = false;
  std::vector<Value> items;
};

struct Parser {
  const std::string& src;
  std::size_t pos = 0;
  int line = 1;

  explicit Parser(const std::string& s) : src(s) {}

  [[noreturn]] void fail(const std::string& what) const {
    throw ConfigError("config line " + std::to_string(line) + ": " + what);
  }

  bool done() const { return pos >= src.size(); }
  char peek() const { return src[pos]; }

  void skip_ws_inline() {
    while (!done() && (peek() == ' ' || peek() == '\t' || peek() == '\r')) ++pos;
    if (!done() && peek() == '#') {
      while (!done() && peek() != '\n') ++pos;
    }
  }

  // Inside arrays newlines are plain whitespace.
  void skip_ws_multiline() {
    for (;;) {
      skip_ws_inline();
      if (!done() && peek() == '\n') {
        ++pos;
        ++line;
        continue;
      }
      return;
    }
  }

  Value parse_value() {
    skip_ws_multiline();
    if (done()) fail("value expected");
    char c = peek();
    if (c == '[') return parse_array();
    if (c == '"') return parse_string();
    if (std::isalpha(static_cast<unsigned char>(c))) return parse_word();
    return parse_number();
  }

  Value parse_array() {
    ++pos;  // consume [
    Value v;
    v.kind = Value::kArray;
    skip_ws_multiline();
    if (!done() && peek() == ']') {
      ++pos;
      return v;
    }
    for (;;) {
      v.items.push_back(parse_value());
      skip_ws_multiline();
      if (done()) fail("unterminated array");
      if (peek() == ',') {
        ++pos;
        skip_ws_multiline();
        if (!done() && peek() == ']') {  // trailing comma
          ++pos;
          return v;
        }
        continue;
      }
      if (peek() == ']') {
        ++pos;
        return v;
      }
      fail("expected ',' or ']' in array");
    }
  }

  Value parse_string() {
    ++pos;  // consume opening quote
    Value v;
    v.kind = Value::kString;
    while (!done() && peek() != '"') {
      if (peek() == '\n') fail("newline in string");
      v.text.push_back(peek());
      ++pos;
    }
    if (done()) fail("unterminated string");
    ++pos;
    return v;
  }

  Value parse_word() {
    std::string w;
    while (!done() && (std::isalnum(static_cast<unsigned char>(peek())) || peek() == '_')) {
      w.push_back(peek());
      ++pos;
    }
    Value v;
    if (w == "true" || w == "false") {
      v.kind = Value::kBool;
      v.flag = (w == "true");
      return v;
    }
    fail("bare word '" + w + "' (strings need quotes)");
  }

  Value parse_number() {
    std::size_t start = pos;
    while (!done() && (std::isdigit(static_cast<unsigned char>(peek())) || peek() == '+' ||
                       peek() == '-' || peek() == '.' || peek() == 'e' || peek() == 'E')) {
      ++pos;
    }
    if (pos == start) fail("value expected");
    std::string tok = src.substr(start, pos - start);
    try {
      std::size_t used = 0;
      Value v;
      v.number = std::stod(tok, &used);
      if (used != tok.size()) fail("bad number '" + tok + "'");
      return v;
    } catch (const std::exception&) {
      fail("bad number '" + tok + "'");
    }
  }

  std::string parse_key() {
    std::string k;
    while (!done() && (std::isalnum(static_cast<unsigned char>(peek())) || peek() == '_')) {
      k.push_back(peek());
      ++pos;
    }
    if (k.empty()) fail("key expected");
    return k;
  }

  std::map<std::string, Value> parse_document() {
    std::map<std::string, Value> out;
    std::string section;
    for (;;) {
      skip_ws_inline();
      if (done()) return out;
      char c = peek();
      if (c == '\n') {
        ++pos;
        ++line;
        continue;
      }
      if (c == '[') {
        ++pos;
        section = parse_key();
        skip_ws_inline();
        if (done() || peek() != ']') fail("unterminated section header");
        ++pos;
        continue;
      }
      std::string key = parse_key();
      std::string full = section.empty() ? key : section + "." + key;
      skip_ws_inline();
      if (done() || peek() != '=') fail("'=' expected after '" + key + "'");
      ++pos;
      Value v = parse_value();
      skip_ws_inline();
      if (!done() && peek() != '\n') fail("trailing content after value of '" + key + "'");
      if (out.count(full)) fail("duplicate key '" + full + "'");
      out.emplace(std::move(full), std::move(v));
    }
  }
};

double require_number(const Value& v, const std::string& key) {
  if (v.kind != Value::kNumber)
    throw ConfigError("config key '" + key + "': number expected");
  return v.number;
}

long require_integer(const Value& v, const std::string& key) {
  double d = require_number(v, key);
  if (std::floor(d) != d || std::abs(d) > 9e15)
    throw ConfigError("config key '" + key + "': integer expected");
  return static_cast<long>(d);
}

OffspringLaw law_from_entry(const Value& entry, const std::string& key) {
  if (entry.kind != Value::kArray || entry.items.size() < 2 ||
      entry.items[1].kind != Value::kString)
    throw ConfigError("config key '" + key +
                      "': catalyst entries are [site, \"law\", params...]");
  const std::string& name = entry.items[1].text;
  std::vector<double> args;
  for (std::size_t i = 2; i < entry.items.size(); ++i)
    args.push_back(require_number(entry.items[i], key));
  auto want = [&](std::size_t n) {
    if (args.size() != n)
      throw ConfigError("config key '" + key + "': law '" + name + "' takes " +
                        std::to_string(n) + " parameter(s)");
  };
  if (name == "deterministic") {
    want(1);
    return OffspringLaw::deterministic(static_cast<long>(args[0]));
  }
  if (name == "poisson") {
    want(1);
    return OffspringLaw::poisson(args[0]);
  }
  if (name == "binomial") {
    want(2);
    return OffspringLaw::binomial(static_cast<long>(args[0]), args[1]);
  }
  if (name == "geometric") {
    want(1);
    return OffspringLaw::geometric(args[0]);
  }
  if (name == "empirical") {
    if (args.empty())
      throw ConfigError("config key '" + key + "': empirical law needs a pmf");
    return OffspringLaw::empirical(args);
  }
  throw ConfigError("config key '" + key + "': unknown offspring law '" + name + "'");
}

ModelSpec model_from_values(const std::map<std::string, Value>& kv) {
  auto walk_it = kv.find("model.walk");
  if (walk_it == kv.end()) throw ConfigError("config: model.walk missing");
  if (walk_it->second.kind != Value::kArray)
    throw ConfigError("config key 'model.walk': array of [step, prob] pairs expected");
  std::vector<std::pair<int, double>> steps;
  for (const Value& pair : walk_it->second.items) {
    if (pair.kind != Value::kArray || pair.items.size() != 2)
      throw ConfigError("config key 'model.walk': entries are [step, prob]");
    steps.emplace_back(
        static_cast<int>(require_integer(pair.items[0], "model.walk")),
        require_number(pair.items[1], "model.walk"));
  }

  auto cat_it = kv.find("model.catalysts");
  if (cat_it == kv.end()) throw ConfigError("config: model.catalysts missing");
  if (cat_it->second.kind != Value::kArray || cat_it->second.items.empty())
    throw ConfigError("config key 'model.catalysts': nonempty array expected");
  std::vector<std::pair<int, OffspringLaw>> cats;
  for (const Value& entry : cat_it->second.items) {
    int site = static_cast<int>(require_integer(entry.items.empty() ? entry : entry.items[0],
                                                "model.catalysts"));
    cats.emplace_back(site, law_from_entry(entry, "model.catalysts"));
  }
  std::sort(cats.begin(), cats.end(),
            [](const auto& a, const auto& b) { return a.first < b.first; });
  std::vector<int> sites;
  std::vector<OffspringLaw> laws;
  for (auto& [site, law] : cats) {
    sites.push_back(site);
    laws.push_back(std::move(law));
  }

  int initial = 0;
  if (auto it = kv.find("model.initial"); it != kv.end())
    initial = static_cast<int>(require_integer(it->second, "model.initial"));

  try {
    return ModelSpec(StepLaw(std::move(steps)), std::move(sites), std::move(laws), initial);
  } catch (const ValidationError& e) {
    throw ConfigError(std::string("config model invalid: ") + e.what());
  }
}

}  // namespace

RunKind parse_run_kind(const std::string& name) {
  if (name == "params") return RunKind::kParams;
  if (name == "lln") return RunKind::kLln;
  if (name == "fluctuation") return RunKind::kFluctuation;
  if (name == "verify") return RunKind::kVerify;
  if (name == "multicat") return RunKind::kMulticat;
  if (name == "expectation") return RunKind::kExpectation;
  throw ConfigError("unknown experiment kind '" + name + "'");
}

std::string run_kind_name(RunKind kind) {
  switch (kind) {
    case RunKind::kParams: return "params";
    case RunKind::kLln: return "lln";
    case RunKind::kFluctuation: return "fluctuation";
    case RunKind::kVerify: return "verify";
    case RunKind::kMulticat: return "multicat";
    case RunKind::kExpectation: return "expectation";
  }
  return "?";
}

ExperimentConfig parse_config_text(const std::string& text) {
  Parser parser(text);
  std::map<std::string, Value> kv = parser.parse_document();

  ExperimentConfig cfg(model_from_values(kv));

  std::map<std::string, bool> seen;
  auto take = [&](const char* key) -> const Value* {
    auto it = kv.find(key);
    if (it == kv.end()) return nullptr;
    seen[key] = true;
    return &it->second;
  };
  seen["model.walk"] = seen["model.catalysts"] = seen["model.initial"] = true;

  if (const Value* v = take("experiment.kind")) {
    if (v->kind != Value::kString)
      throw ConfigError("config key 'experiment.kind': string expected");
    cfg.kind = parse_run_kind(v->text);
  } else {
    throw ConfigError("config: experiment.kind missing");
  }

  if (const Value* v = take("experiment.seed")) {
    long s = require_integer(*v, "experiment.seed");
    if (s < 0) throw ConfigError("config key 'experiment.seed': nonnegative");
    cfg.seed = static_cast<std::uint64_t>(s);
  } else if (cfg.kind != RunKind::kParams && cfg.kind != RunKind::kExpectation) {
    // Deterministic-only runs need no stream; everything stochastic does,
    // and there is deliberately no wall-clock fallback.
    throw ConfigError("config: experiment.seed missing (no clock default)");
  }

  auto int_list = [&](const Value& v, const char* key) {
    std::vector<int> out;
    if (v.kind != Value::kArray)
      throw ConfigError(std::string("config key '") + key + "': array expected");
    for (const Value& item : v.items)
      out.push_back(static_cast<int>(require_integer(item, key)));
    return out;
  };

  if (const Value* v = take("experiment.n_max")) {
    cfg.n_max = static_cast<int>(require_integer(*v, "experiment.n_max"));
    if (cfg.n_max < 1) throw ConfigError("config key 'experiment.n_max': >= 1");
  }
  if (const Value* v = take("experiment.times")) {
    cfg.times = int_list(*v, "experiment.times");
    for (int t : cfg.times)
      if (t < 1 || t > cfg.n_max)
        throw ConfigError("config key 'experiment.times': entries in [1, n_max]");
    if (!std::is_sorted(cfg.times.begin(), cfg.times.end()))
      throw ConfigError("config key 'experiment.times': ascending order required");
  }
  if (const Value* v = take("experiment.replicas")) {
    cfg.replicas = require_integer(*v, "experiment.replicas");
    if (cfg.replicas < 1) throw ConfigError("config key 'experiment.replicas': >= 1");
  }
  if (const Value* v = take("experiment.n_list")) {
    cfg.n_list = int_list(*v, "experiment.n_list");
    if (!std::is_sorted(cfg.n_list.begin(), cfg.n_list.end()) || cfg.n_list.empty())
      throw ConfigError("config key 'experiment.n_list': nonempty ascending");
  }
  if (const Value* v = take("experiment.y_grid")) {
    if (v->kind != Value::kArray)
      throw ConfigError("config key 'experiment.y_grid': array expected");
    for (const Value& item : v->items)
      cfg.y_grid.push_back(require_number(item, "experiment.y_grid"));
  }
  if (const Value* v = take("experiment.k_lambda")) {
    cfg.k_lambda = static_cast<int>(require_integer(*v, "experiment.k_lambda"));
    if (cfg.k_lambda < 0) throw ConfigError("config key 'experiment.k_lambda': >= 0");
  }
  if (const Value* v = take("experiment.cap")) {
    cfg.cap = require_number(*v, "experiment.cap");
    if (!(cfg.cap > 0)) throw ConfigError("config key 'experiment.cap': positive");
  }
  if (const Value* v = take("experiment.threads")) {
    cfg.threads = static_cast<int>(require_integer(*v, "experiment.threads"));
    if (cfg.threads < 1) throw ConfigError("config key 'experiment.threads': >= 1");
  }
  if (const Value* v = take("experiment.out")) {
    if (v->kind != Value::kString)
      throw ConfigError("config key 'experiment.out': string expected");
    cfg.out_dir = v->text;
  }
  if (const Value* v = take("experiment.subsequence_s")) {
    cfg.subsequence_s = require_number(*v, "experiment.subsequence_s");
    if (cfg.subsequence_s < 0.0 || cfg.subsequence_s >= 1.0)
      throw ConfigError("config key 'experiment.subsequence_s': in [0, 1)");
  }
  if (const Value* v = take("experiment.subsequence_tol")) {
    cfg.subsequence_tol = require_number(*v, "experiment.subsequence_tol");
    if (!(cfg.subsequence_tol > 0))
      throw ConfigError("config key 'experiment.subsequence_tol': positive");
  }
  if (const Value* v = take("experiment.pmf_y_min"))
    cfg.pmf_y_min = static_cast<int>(require_integer(*v, "experiment.pmf_y_min"));
  if (const Value* v = take("experiment.pmf_y_max"))
    cfg.pmf_y_max = static_cast<int>(require_integer(*v, "experiment.pmf_y_max"));
  if (cfg.pmf_y_min >= cfg.pmf_y_max)
    throw ConfigError("config: pmf_y_min must be below pmf_y_max");

  for (const auto& [key, value] : kv) {
    (void)value;
    if (!seen.count(key))
      throw ConfigError("config: unknown key '" + key + "'");
  }
  return cfg;
}

ExperimentConfig parse_config_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ConfigError("cannot open config file '" + path + "'");
  std::ostringstream buf;
  buf << in.rdbuf();
  return parse_config_text(buf.str());
}

std::uint64_t config_hash(const ExperimentConfig& cfg) {
  // Canonical rendering of the parsed state, so formatting and key order in
  // the file do not change the hash but any value does.
  std::ostringstream s;
  s.precision(17);
  for (const auto& [step, prob] : cfg.model.walk.steps()) s << "w" << step << ":" << prob << ";";
  for (std::size_t i = 0; i < cfg.model.catalysts.size(); ++i) {
    s << "c" << cfg.model.catalysts[i] << ":" << cfg.model.offspring[i].describe() << ";";
  }
  s << "x0=" << cfg.model.initial_position << ";kind=" << run_kind_name(cfg.kind)
    << ";n_max=" << cfg.n_max << ";replicas=" << cfg.replicas << ";seed=" << cfg.seed
    << ";k_lambda=" << cfg.k_lambda << ";cap=" << cfg.cap << ";s=" << cfg.subsequence_s
    << ";tol=" << cfg.subsequence_tol << ";ymin=" << cfg.pmf_y_min
    << ";ymax=" << cfg.pmf_y_max << ";";
  for (int t : cfg.times) s << "t" << t << ",";
  for (int n : cfg.n_list) s << "n" << n << ",";
  for (double y : cfg.y_grid) s << "y" << y << ",";
  std::string bytes = s.str();
  return fnv1a64(bytes.data(), bytes.size());
}

}  // namespace cbrw
