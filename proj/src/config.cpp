// SPDX-License-Identifier: Apache-2.0
#include "upright/config.hpp"

#include <charconv>
#include <fstream>
#include <functional>
#include <map>
#include <sstream>

namespace upright {

namespace {

template <typename T>
T parse_number(const std::string& key, const std::string& v) {
    T out{};
    const auto [ptr, ec] = std::from_chars(v.data(), v.data() + v.size(), out);
    if (ec != std::errc{} || ptr != v.data() + v.size()) throw ConfigError("config: bad value for " + key + ": '" + v + "'");
    return out;
}

bool parse_bool(const std::string& key, const std::string& v) {
    if (v == "true" || v == "1") return true;
    if (v == "false" || v == "0") return false;
    throw ConfigError("config: bad boolean for " + key + ": '" + v + "'");
}

std::string trim(const std::string& s) {
    const auto a = s.find_first_not_of(" \t\r");
    if (a == std::string::npos) return "";
    return s.substr(a, s.find_last_not_of(" \t\r") - a + 1);
}

std::string fmt(double v) {
    char buf[64];
    const auto r = std::to_chars(buf, buf + sizeof buf, v);
    return std::string(buf, r.ptr);
}

}  // namespace

ModelPreset RunConfig::model_preset() const {
    ModelPreset p = preset_by_name(preset);
    p.lutformer.fusion = lut_fusion;
    return p;
}

std::string RunConfig::to_text() const {
    std::ostringstream o;
    o << "preset=" << preset << '\n'
      << "seed=" << seed << '\n'
      << "steps=" << steps << '\n'
      << "batch=" << batch << '\n'
      << "lr_orientation=" << fmt(lr_orientation) << '\n'
      << "lr_lutformer=" << fmt(lr_lutformer) << '\n'
      << "lr_generator=" << fmt(lr_generator) << '\n'
      << "lr_discriminator=" << fmt(lr_discriminator) << '\n'
      << "lambda=" << fmt(lambda) << '\n'
      << "mu=" << fmt(mu) << '\n'
      << "alpha=" << fmt(alpha) << '\n'
      << "beta=" << fmt(beta) << '\n'
      << "recon_lut=" << recon_lut << '\n'
      << "lut_fusion=" << (lut_fusion ? "true" : "false") << '\n'
      << "threads=" << threads << '\n';
    return o.str();
}

void RunConfig::validate() const {
    preset_by_name(preset);
    if (steps < 1 || batch < 1 || threads < 1) throw ConfigError("config: steps, batch and threads must be positive");
    if (!(lr_orientation > 0 && lr_lutformer > 0 && lr_generator > 0 && lr_discriminator > 0)) {
        throw ConfigError("config: learning rates must be positive");
    }
    if (recon_lut != "learned" && recon_lut != "analytic") throw ConfigError("config: recon_lut must be learned or analytic");
    weights().validate();
}

RunConfig parse_config(const std::string& text) {
    RunConfig c;
    const std::map<std::string, std::function<void(const std::string&, const std::string&)>> setters{
        {"preset", [&](auto&, auto& v) { c.preset = v; }},
        {"seed", [&](auto& k, auto& v) { c.seed = parse_number<std::uint64_t>(k, v); }},
        {"steps", [&](auto& k, auto& v) { c.steps = parse_number<int>(k, v); }},
        {"batch", [&](auto& k, auto& v) { c.batch = parse_number<int>(k, v); }},
        {"lr_orientation", [&](auto& k, auto& v) { c.lr_orientation = parse_number<double>(k, v); }},
        {"lr_lutformer", [&](auto& k, auto& v) { c.lr_lutformer = parse_number<double>(k, v); }},
        {"lr_generator", [&](auto& k, auto& v) { c.lr_generator = parse_number<double>(k, v); }},
        {"lr_discriminator", [&](auto& k, auto& v) { c.lr_discriminator = parse_number<double>(k, v); }},
        {"lambda", [&](auto& k, auto& v) { c.lambda = parse_number<double>(k, v); }},
        {"mu", [&](auto& k, auto& v) { c.mu = parse_number<double>(k, v); }},
        {"alpha", [&](auto& k, auto& v) { c.alpha = parse_number<double>(k, v); }},
        {"beta", [&](auto& k, auto& v) { c.beta = parse_number<double>(k, v); }},
        {"recon_lut", [&](auto&, auto& v) { c.recon_lut = v; }},
        {"lut_fusion", [&](auto& k, auto& v) { c.lut_fusion = parse_bool(k, v); }},
        {"threads", [&](auto& k, auto& v) { c.threads = parse_number<int>(k, v); }},
    };
    std::istringstream in(text);
    std::string line;
    int lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        line = trim(line);
        if (line.empty() || line[0] == '#') continue;
        const auto eq = line.find('=');
        if (eq == std::string::npos) throw ConfigError("config line " + std::to_string(lineno) + ": expected key=value");
        const std::string key = trim(line.substr(0, eq)), value = trim(line.substr(eq + 1));
        const auto it = setters.find(key);
        if (it == setters.end()) throw ConfigError("config line " + std::to_string(lineno) + ": unknown key '" + key + "'");
        it->second(key, value);
    }
    try {
        c.validate();
    } catch (const DomainError& e) {
        throw ConfigError(e.what());
    }
    return c;
}

RunConfig load_config(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw ConfigError("cannot read config " + path.string());
    std::ostringstream s;
    s << in.rdbuf();
    return parse_config(s.str());
}

}  // namespace upright
