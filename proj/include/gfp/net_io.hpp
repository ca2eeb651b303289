#pragma once
#include <filesystem>
#include <string>

#include "gfp/adam.hpp"
#include "gfp/mlp.hpp"

namespace gfp {

// One network on disk: <name>.json (spec, layer shapes, step counter) next to
// <name>.bin, a raw little-endian float64 blob ordered weights, then biases,
// then norm gain/offset, per layer; weight matrices in column-major order.
void save_network(const std::filesystem::path& dir, const std::string& name, const MlpSpec& spec,
                  const ParamSet& params, long long step);

struct LoadedNetwork {
  ParamSet params;
  long long step = 0;
};
// Verifies the manifest's spec against `expected`; throws naming the
// mismatched field otherwise.
LoadedNetwork load_network(const std::filesystem::path& dir, const std::string& name,
                           const MlpSpec& expected);

// Adam moment blobs: first moments then second moments, each laid out like a
// parameter blob. The scalar fields live in the owning trainer state file.
void save_adam_blob(const std::filesystem::path& file, const AdamState& st);
void load_adam_blob(const std::filesystem::path& file, AdamState& st);

// Raw blob helpers shared with the dataset writer.
void write_f64_blob(const std::filesystem::path& file, const ParamSet& p);
void read_f64_blob(const std::filesystem::path& file, ParamSet& p);

}  // namespace gfp
