#include "latentpatch/report.hpp"

#include <cstdio>
#include <fstream>
#include <sstream>

#include <openssl/evp.h>

#include "latentpatch/error.hpp"

namespace latentpatch {

namespace {

void write_text(const std::filesystem::path& path, const std::string& text) {
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw Error("cannot open '" + path.string() + "' for writing");
  out << text;
  if (!out) throw Error("write to '" + path.string() + "' failed");
}

std::vector<std::string> split(std::string_view line, char sep) {
  std::vector<std::string> out;
  std::size_t start = 0;
  for (;;) {
    const auto pos = line.find(sep, start);
    out.emplace_back(line.substr(start, pos - start));
    if (pos == std::string_view::npos) return out;
    start = pos + 1;
  }
}

double parse_double(const std::string& s, std::size_t line) {
  try {
    std::size_t used = 0;
    const double v = std::stod(s, &used);
    if (used != s.size()) throw std::invalid_argument(s);
    return v;
  } catch (const std::exception&) {
    throw Error("results line " + std::to_string(line) + ": bad number '" + s + "'");
  }
}

nlohmann::json series_json(const std::vector<Aggregate>& s) {
  nlohmann::json out = nlohmann::json::array();
  for (const auto& a : s)
    out.push_back({{"mean", a.mean}, {"ci_low", a.ci_low}, {"ci_high", a.ci_high}, {"n", a.n}});
  return out;
}

}  // namespace

std::string format_float(double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.9g", v);
  return buf;
}

std::string results_csv(std::span<const LayerSweepResult> results) {
  std::string out(kResultsHeader);
  out += '\n';
  for (const auto& r : results) {
    for (const auto& label : r.labels) {
      const auto& s = r.series.at(label);
      for (std::size_t j = 0; j < s.size(); ++j) {
        out += r.experiment + ',' + std::to_string(j) + ',' + label + ',' + format_float(s[j].mean) +
               ',' + format_float(s[j].ci_low) + ',' + format_float(s[j].ci_high) + ',' +
               std::to_string(s[j].n) + '\n';
      }
    }
  }
  return out;
}

void write_results(std::span<const LayerSweepResult> results, const std::filesystem::path& path) {
  write_text(path, results_csv(results));
}

std::vector<LayerSweepResult> parse_results_csv(std::string_view text) {
  std::istringstream in{std::string(text)};
  std::string line;
  if (!std::getline(in, line) || line != kResultsHeader)
    throw Error("results header must be exactly '" + std::string(kResultsHeader) + "'");
  std::vector<LayerSweepResult> out;
  std::size_t lineno = 1;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.empty()) continue;
    const auto f = split(line, ',');
    if (f.size() != 7)
      throw Error("results line " + std::to_string(lineno) + ": expected 7 fields");
    if (out.empty() || out.back().experiment != f[0]) {
      out.emplace_back();
      out.back().experiment = f[0];
    }
    auto& r = out.back();
    const auto layer = static_cast<std::size_t>(parse_double(f[1], lineno));
    if (!r.series.contains(f[2])) r.labels.push_back(f[2]);
    auto& s = r.series[f[2]];
    if (layer != s.size())
      throw Error("results line " + std::to_string(lineno) + ": layer " + f[1] + " out of order");
    s.push_back({parse_double(f[3], lineno), parse_double(f[4], lineno), parse_double(f[5], lineno),
                 static_cast<std::size_t>(parse_double(f[6], lineno))});
  }
  return out;
}

std::vector<LayerSweepResult> read_results(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error("cannot open results '" + path.string() + "'");
  std::ostringstream ss;
  ss << in.rdbuf();
  return parse_results_csv(ss.str());
}

std::string canonical_json(const nlohmann::json& j) { return j.dump(); }

std::string sha256_hex(std::string_view data) {
  unsigned char digest[EVP_MAX_MD_SIZE];
  unsigned int len = 0;
  if (EVP_Digest(data.data(), data.size(), digest, &len, EVP_sha256(), nullptr) != 1)
    throw Error("sha256 failed");
  static const char* hex = "0123456789abcdef";
  std::string out;
  for (unsigned int i = 0; i < len; ++i) {
    out += hex[digest[i] >> 4];
    out += hex[digest[i] & 0xf];
  }
  return out;
}

std::string config_hash(const nlohmann::json& config) {
  return sha256_hex(canonical_json(config));
}

nlohmann::json sidecar(std::span<const LayerSweepResult> results, const nlohmann::json& config) {
  nlohmann::json j;
  j["tool"] = "latentpatch";
  j["version"] = LATENTPATCH_VERSION;
  j["config"] = config;
  j["config_sha256"] = config_hash(config);
  j["seed"] = config.value("seed", 0);
  j["experiments"] = nlohmann::json::array();
  for (const auto& r : results) {
    nlohmann::json e;
    e["experiment"] = r.experiment;
    e["series"] = r.labels;
    e["baselines"] = r.baselines;
    e["regime_claims_allowed"] = r.regime_claims_allowed;
    nlohmann::json acc = nlohmann::json::object();
    for (const auto& label : r.labels)
      if (r.accuracy.contains(label)) acc[label] = series_json(r.accuracy.at(label));
    e["accuracy"] = acc;
    j["experiments"].push_back(e);
  }
  return j;
}

void write_sidecar(std::span<const LayerSweepResult> results, const nlohmann::json& config,
                   const std::filesystem::path& path) {
  write_text(path, sidecar(results, config).dump(2) + "\n");
}

std::string plot_data(std::span<const LayerSweepResult> results) {
  std::string out(kPlotHeader);
  out += '\n';
  for (const auto& r : results) {
    for (const auto& label : r.labels) {
      const auto& s = r.series.at(label);
      for (std::size_t j = 0; j < s.size(); ++j) {
        out += r.experiment + ',' + label + ',' + std::to_string(j) + ',' +
               format_float(s[j].mean) + ',' + format_float(s[j].ci_low) + ',' +
               format_float(s[j].ci_high) + ',' + format_float(s[j].ci_high - s[j].mean) + ',' +
               std::to_string(s[j].n) + '\n';
      }
    }
  }
  return out;
}

}  // namespace latentpatch
