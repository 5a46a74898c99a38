#include "latentpatch/config.hpp"

#include <fstream>

#include "latentpatch/error.hpp"

namespace latentpatch {

namespace {

constexpr std::pair<Protocol, const char*> kProtocols[] = {
    {Protocol::exp1, "exp1"},
    {Protocol::exp2, "exp2"},
    {Protocol::exp3, "exp3"},
    {Protocol::context_mean, "context-mean"},
    {Protocol::patchscope, "patchscope"},
    {Protocol::controls, "controls"},
};

nlohmann::json pair_json(const LangPair& p) { return nlohmann::json::array({p.first, p.second}); }

LangPair pair_from_json(const nlohmann::json& j) {
  if (!j.is_array() || j.size() != 2) throw Error("language pair must be [input, output]");
  return {j[0].get<std::string>(), j[1].get<std::string>()};
}

}  // namespace

std::string to_string(Protocol p) {
  for (const auto& [v, name] : kProtocols)
    if (v == p) return name;
  return "?";
}

Protocol protocol_from_string(std::string_view s) {
  for (const auto& [v, name] : kProtocols)
    if (s == name) return v;
  throw Error("unknown protocol '" + std::string(s) + "'");
}

void ExperimentConfig::validate() const {
  if (n_pairs == 0) throw Error("config: n_pairs must be at least 1");
  if (k == 0) throw Error("config: k must be at least 1");
  if (threads == 0) throw Error("config: threads must be at least 1");
  for (const auto& [in, out] : source_pairs)
    if (in == out) throw Error("config: source pair " + in + "->" + out + " repeats a language");
  if (target_pair && target_pair->first == target_pair->second)
    throw Error("config: target pair repeats a language");
  if (!synthetic && (vocab.empty() || lexicon.empty()))
    throw Error("config: give either vocab and lexicon paths or a synthetic section");
  if (model.kind != "oracle" && model.kind != "transformer")
    throw Error("config: model kind must be oracle or transformer");
  if (model.kind == "transformer" && model.path.empty())
    throw Error("config: transformer model needs a path");
  if (model.oracle) model.oracle->validate();
}

nlohmann::json to_json(const ExperimentConfig& c) {
  nlohmann::json j;
  j["protocol"] = to_string(c.protocol);
  j["source_pairs"] = nlohmann::json::array();
  for (const auto& p : c.source_pairs) j["source_pairs"].push_back(pair_json(p));
  j["target_pair"] = c.target_pair ? pair_json(*c.target_pair) : nlohmann::json();
  j["n_shots"] = c.n_shots;
  j["n_pairs"] = c.n_pairs;
  j["k"] = c.k;
  j["seed"] = c.seed;
  j["threads"] = c.threads;
  j["baseline_floor"] = c.baseline_floor;
  j["patchscope_span"] = c.patchscope_span;
  j["control_variants"] = nlohmann::json::array();
  for (auto v : c.control_variants) j["control_variants"].push_back(to_string(v));
  j["max_attempts"] = c.max_attempts;
  j["vocab"] = c.vocab;
  j["lexicon"] = c.lexicon;
  j["synthetic"] = c.synthetic ? to_json(*c.synthetic) : nlohmann::json();
  nlohmann::json m = {{"kind", c.model.kind}, {"path", c.model.path}};
  m["oracle"] = c.model.oracle ? to_json(*c.model.oracle) : nlohmann::json();
  j["model"] = m;
  return j;
}

ExperimentConfig experiment_config_from_json(const nlohmann::json& j) {
  ExperimentConfig c;
  try {
    if (!j.is_object()) throw Error("config must be a JSON object");
    if (j.contains("protocol")) c.protocol = protocol_from_string(j["protocol"].get<std::string>());
    if (j.contains("source_pairs"))
      for (const auto& p : j["source_pairs"]) c.source_pairs.push_back(pair_from_json(p));
    if (j.contains("target_pair") && !j["target_pair"].is_null())
      c.target_pair = pair_from_json(j["target_pair"]);
    c.n_shots = j.value("n_shots", c.n_shots);
    c.n_pairs = j.value("n_pairs", c.n_pairs);
    c.k = j.value("k", c.k);
    c.seed = j.value("seed", c.seed);
    c.threads = j.value("threads", c.threads);
    c.baseline_floor = j.value("baseline_floor", c.baseline_floor);
    c.patchscope_span = j.value("patchscope_span", c.patchscope_span);
    if (j.contains("control_variants")) {
      c.control_variants.clear();
      for (const auto& v : j["control_variants"])
        c.control_variants.push_back(control_variant_from_string(v.get<std::string>()));
    }
    c.max_attempts = j.value("max_attempts", c.max_attempts);
    c.vocab = j.value("vocab", c.vocab);
    c.lexicon = j.value("lexicon", c.lexicon);
    if (j.contains("synthetic") && !j["synthetic"].is_null())
      c.synthetic = synthetic_config_from_json(j["synthetic"]);
    if (j.contains("model")) {
      const auto& m = j["model"];
      c.model.kind = m.value("kind", c.model.kind);
      c.model.path = m.value("path", c.model.path);
      if (m.contains("oracle") && !m["oracle"].is_null())
        c.model.oracle = oracle_spec_from_json(m["oracle"]);
    }
  } catch (const nlohmann::json::exception& e) {
    throw Error(std::string("config: ") + e.what());
  }
  c.validate();
  return c;
}

ExperimentConfig load_experiment_config(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw Error("cannot open config '" + path.string() + "'");
  try {
    return experiment_config_from_json(nlohmann::json::parse(in));
  } catch (const nlohmann::json::parse_error& e) {
    throw Error("config '" + path.string() + "': " + e.what());
  }
}

}  // namespace latentpatch
