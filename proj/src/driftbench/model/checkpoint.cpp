#include "driftbench/model/checkpoint.h"

#include <cstring>
#include <nlohmann/json.hpp>

#include "driftbench/core/error.h"
#include "driftbench/core/io.h"

namespace driftbench::model {

using nlohmann::json;

namespace {

constexpr char kMagic[8] = {'D', 'B', 'C', 'K', 'P', 'T', '0', '1'};

void append(std::string& buf, const void* data, size_t n) {
  buf.append(static_cast<const char*>(data), n);
}

}  // namespace

void save_checkpoint(TinyTransformer& model, const CheckpointMeta& meta,
                     const std::filesystem::path& path) {
  auto views = model.tensor_views();

  std::string blob;
  append(blob, kMagic, sizeof(kMagic));
  const uint64_t count = views.size();
  append(blob, &count, sizeof(count));
  for (const auto& tv : views) {
    const uint64_t name_len = tv.name.size();
    append(blob, &name_len, sizeof(name_len));
    append(blob, tv.name.data(), tv.name.size());
    const uint64_t n = tv.w->size();
    append(blob, &n, sizeof(n));
    append(blob, tv.w->data(), n * sizeof(double));
    append(blob, tv.adam_m->data(), n * sizeof(double));
    append(blob, tv.adam_v->data(), n * sizeof(double));
  }
  write_bytes_atomic(path, blob.data(), blob.size());

  json manifest;
  manifest["backbone_id"] = model.backbone_id();
  manifest["config_hash"] = meta.config_hash;
  manifest["step"] = model.optimizer_step_count();
  manifest["completed_phases"] = meta.completed_phases;
  manifest["active_phase"] = meta.active_phase;
  manifest["phase_token_offset"] = meta.phase_token_offset;
  manifest["phase_step"] = meta.phase_step;
  manifest["adapters_attached"] = model.adapters_attached();
  manifest["groups"] = model.group_names();
  manifest["frozen"] = std::vector<std::string>(model.frozen().begin(), model.frozen().end());
  std::filesystem::path mpath = path;
  mpath += ".json";
  write_text_file_atomic(mpath, manifest.dump(2) + "\n");
}

CheckpointMeta read_checkpoint_meta(const std::filesystem::path& path) {
  std::filesystem::path mpath = path;
  mpath += ".json";
  json manifest = json::parse(read_text_file(mpath));
  CheckpointMeta meta;
  meta.config_hash = manifest.at("config_hash").get<std::string>();
  meta.completed_phases = manifest.at("completed_phases").get<int>();
  meta.active_phase = manifest.at("active_phase").get<int>();
  meta.phase_token_offset = manifest.at("phase_token_offset").get<int64_t>();
  meta.phase_step = manifest.at("phase_step").get<int64_t>();
  return meta;
}

CheckpointMeta load_checkpoint(TinyTransformer& model, const std::filesystem::path& path) {
  std::filesystem::path mpath = path;
  mpath += ".json";
  json manifest = json::parse(read_text_file(mpath));
  require(manifest.at("backbone_id").get<std::string>() == model.backbone_id(), Errc::CorruptRun,
          "backbone id mismatch");

  const auto blob = read_bytes(path);
  size_t off = 0;
  auto take = [&](void* dst, size_t n) {
    require(off + n <= blob.size(), Errc::CorruptRun, "truncated checkpoint blob");
    std::memcpy(dst, blob.data() + off, n);
    off += n;
  };
  char magic[8];
  take(magic, sizeof(magic));
  require(std::memcmp(magic, kMagic, sizeof(kMagic)) == 0, Errc::CorruptRun,
          "bad checkpoint magic");
  uint64_t count = 0;
  take(&count, sizeof(count));
  auto views = model.tensor_views();
  require(count == views.size(), Errc::CorruptRun, "tensor count mismatch");
  for (auto& tv : views) {
    uint64_t name_len = 0;
    take(&name_len, sizeof(name_len));
    std::string name(name_len, '\0');
    take(name.data(), name_len);
    require(name == tv.name, Errc::CorruptRun, "tensor order mismatch at " + tv.name);
    uint64_t n = 0;
    take(&n, sizeof(n));
    require(n == tv.w->size(), Errc::CorruptRun, "tensor size mismatch at " + tv.name);
    take(tv.w->data(), n * sizeof(double));
    take(tv.adam_m->data(), n * sizeof(double));
    take(tv.adam_v->data(), n * sizeof(double));
  }
  require(off == blob.size(), Errc::CorruptRun, "trailing bytes in checkpoint blob");

  model.set_optimizer_step_count(manifest.at("step").get<int64_t>());
  std::set<std::string> frozen;
  for (const auto& g : manifest.at("frozen")) frozen.insert(g.get<std::string>());
  model.set_frozen(frozen);
  return read_checkpoint_meta(path);
}

}  // namespace driftbench::model
