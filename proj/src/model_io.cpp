#include "kstgp/model_io.hpp"

#include <fstream>

namespace kstgp {

namespace {

using nlohmann::json;

json hyper_to_json(const Hyperparameters& h) {
  return {{"sigma2", h.sigma2},
          {"length_scale", h.length_scale},
          {"alpha", h.alpha},
          {"noise_var", h.noise_var}};
}

Hyperparameters hyper_from_json(const json& j) {
  Hyperparameters h;
  h.sigma2 = j.at("sigma2").get<double>();
  h.length_scale = j.at("length_scale").get<double>();
  h.alpha = j.at("alpha").get<double>();
  h.noise_var = j.at("noise_var").get<double>();
  h.validate();
  return h;
}

json af_to_json(const GPActivation& af) {
  return {{"xs", af.points().xs},
          {"ys", af.points().ys},
          {"hyper", hyper_to_json(af.hyper())}};
}

GPActivation af_from_json(const json& j) {
  ControlPointSet pts;
  pts.xs = j.at("xs").get<std::vector<double>>();
  pts.ys = j.at("ys").get<std::vector<double>>();
  return {std::move(pts), hyper_from_json(j.at("hyper"))};
}

json network_to_json(const Network& net) {
  json units = json::array();
  for (const auto& u : net.units()) {
    json inner = json::array();
    for (const auto& af : u.inner) inner.push_back(af_to_json(af));
    units.push_back({{"inner", inner}, {"outer", af_to_json(u.outer)}});
  }
  return {{"dims", net.dims()}, {"units", units}};
}

Network network_from_json(const json& j) {
  const auto dims = j.at("dims").get<std::size_t>();
  std::vector<Unit> units;
  for (const auto& ju : j.at("units")) {
    Unit u;
    for (const auto& ja : ju.at("inner")) u.inner.push_back(af_from_json(ja));
    u.outer = af_from_json(ju.at("outer"));
    units.push_back(std::move(u));
  }
  return Network(dims, std::move(units));
}

}  // namespace

std::string model_to_string(const ModelFile& m) {
  json ranges = json::array();
  for (const auto& [lo, hi] : m.col_range) ranges.push_back({{"min", lo}, {"max", hi}});
  const json j = {{"format", "kstgp-model"},
                  {"version", m.version},
                  {"network", network_to_json(m.net)},
                  {"standardization", ranges},
                  {"feature_names", m.feature_names},
                  {"noise_injected", m.noise_injected},
                  {"noise_seed", m.noise_seed},
                  {"split_seed", m.split_seed},
                  {"split_ratio", m.split_ratio},
                  {"trained_on_n", m.trained_on_n},
                  {"config", m.config_echo},
                  {"summary", m.summary}};
  return j.dump(2) + "\n";
}

ModelFile model_from_string(const std::string& text) {
  try {
    const json j = json::parse(text);
    if (j.at("format").get<std::string>() != "kstgp-model")
      throw ParseError("not a model file");
    ModelFile m;
    m.version = j.at("version").get<int>();
    m.net = network_from_json(j.at("network"));
    for (const auto& r : j.at("standardization"))
      m.col_range.emplace_back(r.at("min").get<double>(), r.at("max").get<double>());
    m.feature_names = j.at("feature_names").get<std::vector<std::string>>();
    m.noise_injected = j.at("noise_injected").get<bool>();
    m.noise_seed = j.at("noise_seed").get<std::uint64_t>();
    m.split_seed = j.at("split_seed").get<std::uint64_t>();
    m.split_ratio = j.at("split_ratio").get<double>();
    m.trained_on_n = j.at("trained_on_n").get<std::size_t>();
    m.config_echo = j.value("config", json::object());
    m.summary = j.value("summary", json::object());
    return m;
  } catch (const ParseError&) {
    throw;
  } catch (const std::exception& e) {
    throw ParseError(std::string("model file parse failure: ") + e.what());
  }
}

void save_model(const ModelFile& m, const std::string& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw ParseError("cannot write " + path);
  out << model_to_string(m);
}

ModelFile load_model(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ParseError("cannot open " + path);
  std::string text((std::istreambuf_iterator<char>(in)),
                   std::istreambuf_iterator<char>());
  return model_from_string(text);
}

}  // namespace kstgp
