#include "gfp/net_io.hpp"

#include <bit>
#include <fstream>
#include <stdexcept>

#include <json.hpp>

namespace gfp {

namespace {
using nlohmann::json;

void write_doubles(std::ofstream& f, const double* data, std::streamsize n) {
  static_assert(std::endian::native == std::endian::little,
                "blob format is little-endian; big-endian hosts need byte swaps");
  f.write(reinterpret_cast<const char*>(data), n * static_cast<std::streamsize>(sizeof(double)));
}

void read_doubles(std::ifstream& f, double* data, std::streamsize n) {
  f.read(reinterpret_cast<char*>(data), n * static_cast<std::streamsize>(sizeof(double)));
  if (!f) throw std::runtime_error("blob truncated while reading parameters");
}

json spec_to_json(const MlpSpec& spec) {
  return json{{"input_dim", spec.input_dim},
              {"hidden_dims", spec.hidden_dims},
              {"output_dim", spec.output_dim},
              {"use_layer_norm", spec.use_layer_norm},
              {"time_embed_dim", spec.time_embed_dim}};
}

MlpSpec spec_from_json(const json& j) {
  MlpSpec spec;
  spec.input_dim = j.at("input_dim").get<int>();
  spec.hidden_dims = j.at("hidden_dims").get<std::vector<int>>();
  spec.output_dim = j.at("output_dim").get<int>();
  spec.use_layer_norm = j.at("use_layer_norm").get<bool>();
  spec.time_embed_dim = j.at("time_embed_dim").get<int>();
  return spec;
}
}  // namespace

void write_f64_blob(const std::filesystem::path& file, const ParamSet& p) {
  std::ofstream f(file, std::ios::binary | std::ios::trunc);
  if (!f) throw std::runtime_error("cannot open for writing: " + file.string());
  for (const auto& l : p.layers) {
    write_doubles(f, l.W.data(), l.W.size());
    write_doubles(f, l.b.data(), l.b.size());
    if (l.ln_gain.size()) {
      write_doubles(f, l.ln_gain.data(), l.ln_gain.size());
      write_doubles(f, l.ln_offset.data(), l.ln_offset.size());
    }
  }
  if (!f) throw std::runtime_error("write failed: " + file.string());
}

void read_f64_blob(const std::filesystem::path& file, ParamSet& p) {
  std::ifstream f(file, std::ios::binary);
  if (!f) throw std::runtime_error("cannot open for reading: " + file.string());
  for (auto& l : p.layers) {
    read_doubles(f, l.W.data(), l.W.size());
    read_doubles(f, l.b.data(), l.b.size());
    if (l.ln_gain.size()) {
      read_doubles(f, l.ln_gain.data(), l.ln_gain.size());
      read_doubles(f, l.ln_offset.data(), l.ln_offset.size());
    }
  }
  f.peek();
  if (!f.eof()) throw std::runtime_error("blob has trailing bytes: " + file.string());
}

void save_network(const std::filesystem::path& dir, const std::string& name, const MlpSpec& spec,
                  const ParamSet& params, long long step) {
  check_shapes(spec, params, "save_network(" + name + ")");
  std::filesystem::create_directories(dir);
  json manifest;
  manifest["spec"] = spec_to_json(spec);
  manifest["step"] = step;
  json shapes = json::array();
  for (const auto& l : params.layers)
    shapes.push_back(json{{"out", l.W.rows()}, {"in", l.W.cols()}, {"norm", l.ln_gain.size() > 0}});
  manifest["layer_shapes"] = shapes;
  manifest["blob"] = name + ".bin";

  std::ofstream mf(dir / (name + ".json"), std::ios::trunc);
  if (!mf) throw std::runtime_error("cannot open for writing: " + (dir / (name + ".json")).string());
  mf << manifest.dump(2) << "\n";
  write_f64_blob(dir / (name + ".bin"), params);
}

LoadedNetwork load_network(const std::filesystem::path& dir, const std::string& name,
                           const MlpSpec& expected) {
  std::ifstream mf(dir / (name + ".json"));
  if (!mf) throw std::runtime_error("missing network manifest: " + (dir / (name + ".json")).string());
  json manifest = json::parse(mf);
  const MlpSpec stored = spec_from_json(manifest.at("spec"));
  if (!(stored == expected)) {
    std::string field = "spec";
    if (stored.input_dim != expected.input_dim) field = "input_dim";
    else if (stored.hidden_dims != expected.hidden_dims) field = "hidden_dims";
    else if (stored.output_dim != expected.output_dim) field = "output_dim";
    else if (stored.use_layer_norm != expected.use_layer_norm) field = "use_layer_norm";
    else if (stored.time_embed_dim != expected.time_embed_dim) field = "time_embed_dim";
    throw std::runtime_error("network '" + name + "' spec mismatch on field " + field);
  }
  LoadedNetwork out;
  out.step = manifest.at("step").get<long long>();
  out.params = shaped_zeros(expected);
  read_f64_blob(dir / manifest.at("blob").get<std::string>(), out.params);
  return out;
}

void save_adam_blob(const std::filesystem::path& file, const AdamState& st) {
  std::ofstream f(file, std::ios::binary | std::ios::trunc);
  if (!f) throw std::runtime_error("cannot open for writing: " + file.string());
  for (const ParamSet* ps : {&st.m, &st.v}) {
    for (const auto& l : ps->layers) {
      write_doubles(f, l.W.data(), l.W.size());
      write_doubles(f, l.b.data(), l.b.size());
      if (l.ln_gain.size()) {
        write_doubles(f, l.ln_gain.data(), l.ln_gain.size());
        write_doubles(f, l.ln_offset.data(), l.ln_offset.size());
      }
    }
  }
  if (!f) throw std::runtime_error("write failed: " + file.string());
}

void load_adam_blob(const std::filesystem::path& file, AdamState& st) {
  std::ifstream f(file, std::ios::binary);
  if (!f) throw std::runtime_error("cannot open for reading: " + file.string());
  for (ParamSet* ps : {&st.m, &st.v}) {
    for (auto& l : ps->layers) {
      read_doubles(f, l.W.data(), l.W.size());
      read_doubles(f, l.b.data(), l.b.size());
      if (l.ln_gain.size()) {
        read_doubles(f, l.ln_gain.data(), l.ln_gain.size());
        read_doubles(f, l.ln_offset.data(), l.ln_offset.size());
      }
    }
  }
  f.peek();
  if (!f.eof()) throw std::runtime_error("adam blob has trailing bytes: " + file.string());
}

}  // namespace gfp
