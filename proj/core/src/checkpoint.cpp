#include "cuot/checkpoint.hpp"

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <stdexcept>

#include <nlohmann/json.hpp>

namespace cuot {

void write_file_atomic(const std::string& path, const std::string& content) {
  namespace fs = std::filesystem;
  const fs::path target(path);
  if (target.has_parent_path()) fs::create_directories(target.parent_path());
  const fs::path tmp = target.string() + ".tmp." + std::to_string(::getpid());
  {
    std::ofstream os(tmp, std::ios::binary);
    if (!os) throw std::runtime_error("cannot open '" + tmp.string() + "' for writing");
    os << content;
    if (!os) throw std::runtime_error("failed writing '" + tmp.string() + "'");
  }
  fs::rename(tmp, target);
}

std::string read_file(const std::string& path) {
  std::ifstream is(path, std::ios::binary);
  if (!is) throw std::runtime_error("cannot open '" + path + "'");
  std::ostringstream os;
  os << is.rdbuf();
  return os.str();
}

using nlohmann::json;

std::string params_to_json(const ParamSet& set, uint64_t arch_hash,
                           const std::string& kind) {
  json j;
  j["format"] = "cuot-params-v1";
  j["kind"] = kind;
  j["arch_hash"] = arch_hash;
  j["tensors"] = json::array();
  for (const auto& t : set.tensors) {
    json jt;
    jt["name"] = t.name;
    jt["shape"] = t.shape;
    jt["data"] = *t.data;
    j["tensors"].push_back(std::move(jt));
  }
  return j.dump();
}

LoadedParams params_from_json(const std::string& text) {
  json j = json::parse(text);
  if (j.value("format", "") != "cuot-params-v1")
    throw std::runtime_error("not a cuot parameter container");
  LoadedParams out;
  out.kind = j.at("kind").get<std::string>();
  out.arch_hash = j.at("arch_hash").get<uint64_t>();
  for (const auto& jt : j.at("tensors")) {
    ParamTensor t;
    t.name = jt.at("name").get<std::string>();
    t.shape = jt.at("shape").get<ad::Shape>();
    t.data = std::make_shared<std::vector<double>>(
        jt.at("data").get<std::vector<double>>());
    if (static_cast<int64_t>(t.data->size()) != t.numel())
      throw std::runtime_error("tensor '" + t.name + "' data/shape mismatch");
    out.set.tensors.push_back(std::move(t));
  }
  return out;
}

}  // namespace cuot
