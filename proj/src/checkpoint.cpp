// Copyright 2026 The ConcateNet Authors
// License: Apache 2.0 (http://www.apache.org/licenses/LICENSE-2.0)

#include "concatenet/checkpoint.hpp"

#include <bit>
#include <cstdio>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <iterator>
#include <json.hpp>
#include <vector>

namespace concatenet {

namespace {

constexpr char kMagic[8] = {'C', 'N', 'E', 'T', 'C', 'K', 'P', 'T'};
constexpr const char* kMomentPrefix[2] = {"optim.m/", "optim.v/"};

nlohmann::json config_to_json(const ModelConfig& c) {
  return {{"channels", c.channels},     {"bands", c.bands},         {"depth", c.depth},
          {"nlr_channels", c.nlr_channels}, {"window_len", c.window_len}, {"hop", c.hop},
          {"sample_rate", c.sample_rate}, {"f_min", c.f_min},        {"f_max", c.f_max},
          {"init_seed", c.init_seed}};
}

ModelConfig config_from_json(const nlohmann::json& j) {
  ModelConfig c;
  c.channels = j.at("channels").get<std::size_t>();
  c.bands = j.at("bands").get<std::size_t>();
  c.depth = j.at("depth").get<std::size_t>();
  c.nlr_channels = j.at("nlr_channels").get<std::size_t>();
  c.window_len = j.at("window_len").get<std::size_t>();
  c.hop = j.at("hop").get<std::size_t>();
  c.sample_rate = j.at("sample_rate").get<double>();
  c.f_min = j.at("f_min").get<double>();
  c.f_max = j.at("f_max").get<double>();
  c.init_seed = j.at("init_seed").get<std::uint64_t>();
  return c;
}

class Writer {
 public:
  void bytes(const void* p, std::size_t n) {
    const auto* b = static_cast<const unsigned char*>(p);
    buf_.insert(buf_.end(), b, b + n);
  }
  template <typename T>
  void le(T v) {
    using U = std::make_unsigned_t<T>;
    auto u = static_cast<U>(v);
    for (std::size_t i = 0; i < sizeof(T); ++i) buf_.push_back(static_cast<unsigned char>(u >> (8 * i)));
  }
  void record(const std::string& name, const Shape& shape, std::span<const double> data,
              ScalarType type) {
    le<std::uint32_t>(static_cast<std::uint32_t>(name.size()));
    bytes(name.data(), name.size());
    le<std::uint8_t>(static_cast<std::uint8_t>(type));
    le<std::uint32_t>(static_cast<std::uint32_t>(shape.size()));
    for (auto d : shape) le<std::uint64_t>(d);
    for (double v : data) {
      if (type == ScalarType::kFloat32) {
        le<std::uint32_t>(std::bit_cast<std::uint32_t>(static_cast<float>(v)));
      } else {
        le<std::uint64_t>(std::bit_cast<std::uint64_t>(v));
      }
    }
  }
  const std::vector<unsigned char>& buffer() const { return buf_; }

 private:
  std::vector<unsigned char> buf_;
};

class Reader {
 public:
  Reader(const std::vector<unsigned char>& buf, std::string path) : buf_(buf), path_(std::move(path)) {}

  const unsigned char* take(std::size_t n) {
    if (n > buf_.size() - pos_) throw CheckpointError(path_ + ": truncated checkpoint");
    const unsigned char* p = buf_.data() + pos_;
    pos_ += n;
    return p;
  }
  template <typename T>
  T le() {
    const unsigned char* p = take(sizeof(T));
    std::make_unsigned_t<T> u = 0;
    for (std::size_t i = 0; i < sizeof(T); ++i) u |= static_cast<std::make_unsigned_t<T>>(p[i]) << (8 * i);
    return static_cast<T>(u);
  }
  bool done() const { return pos_ == buf_.size(); }

 private:
  const std::vector<unsigned char>& buf_;
  std::string path_;
  std::size_t pos_ = 0;
};

}  // namespace

void save_checkpoint(const std::string& path, const ConcateNet& model, const TrainingMeta& meta,
                     const AdamState* optimizer, ScalarType scalar_type) {
  nlohmann::json header = {
      {"format", "concatenet-checkpoint"},
      {"config", config_to_json(model.config())},
      {"meta",
       {{"step", meta.step}, {"seed", meta.seed}, {"nlr_enabled", meta.nlr_enabled},
        {"last_loss", meta.last_loss}}},
      {"scalar_type", scalar_type == ScalarType::kFloat32 ? "f32" : "f64"},
      {"parameter_count", model.parameter_count()},
      {"has_optimizer", optimizer != nullptr},
      {"optimizer_step", optimizer ? optimizer->step : 0},
  };
  const std::string header_text = header.dump();

  const auto state = model.params().state();
  std::size_t records = state.size();
  if (optimizer) records += optimizer->m.size() + optimizer->v.size();

  Writer w;
  w.bytes(kMagic, sizeof(kMagic));
  w.le<std::uint32_t>(kCheckpointVersion);
  w.le<std::uint64_t>(header_text.size());
  w.bytes(header_text.data(), header_text.size());
  w.le<std::uint64_t>(records);
  for (const auto& [name, t] : state) w.record(name, t.shape(), t.data(), scalar_type);
  if (optimizer) {
    const std::map<std::string, std::vector<double>>* moments[2] = {&optimizer->m, &optimizer->v};
    for (int k = 0; k < 2; ++k) {
      for (const auto& [name, values] : *moments[k]) {
        w.record(kMomentPrefix[k] + name, {values.size()}, values, scalar_type);
      }
    }
  }

  const std::string tmp = path + ".partial";
  {
    std::ofstream os(tmp, std::ios::binary | std::ios::trunc);
    if (!os) throw CheckpointError("cannot open " + tmp + " for writing");
    os.write(reinterpret_cast<const char*>(w.buffer().data()),
             static_cast<std::streamsize>(w.buffer().size()));
    if (!os) {
      os.close();
      std::remove(tmp.c_str());
      throw CheckpointError("failed writing checkpoint " + path);
    }
  }
  std::filesystem::rename(tmp, path);
}

CheckpointData read_checkpoint(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw CheckpointError("cannot open checkpoint " + path);
  const std::vector<unsigned char> buf((std::istreambuf_iterator<char>(in)),
                                       std::istreambuf_iterator<char>());
  Reader r(buf, path);
  if (std::memcmp(r.take(sizeof(kMagic)), kMagic, sizeof(kMagic)) != 0) {
    throw CheckpointError(path + ": not a checkpoint file");
  }
  const auto version = r.le<std::uint32_t>();
  if (version != kCheckpointVersion) {
    throw CheckpointError(path + ": unsupported checkpoint version " + std::to_string(version) +
                          " (expected " + std::to_string(kCheckpointVersion) + ")");
  }
  const auto header_len = r.le<std::uint64_t>();
  const auto* header_bytes = r.take(header_len);
  CheckpointData data;
  bool has_optimizer = false;
  try {
    const auto header = nlohmann::json::parse(header_bytes, header_bytes + header_len);
    data.config = config_from_json(header.at("config"));
    const auto& meta = header.at("meta");
    data.meta.step = meta.at("step").get<std::uint64_t>();
    data.meta.seed = meta.at("seed").get<std::uint64_t>();
    data.meta.nlr_enabled = meta.at("nlr_enabled").get<bool>();
    data.meta.last_loss = meta.at("last_loss").get<double>();
    has_optimizer = header.at("has_optimizer").get<bool>();
    if (has_optimizer) {
      data.optimizer.emplace();
      data.optimizer->step = header.at("optimizer_step").get<std::uint64_t>();
    }
  } catch (const nlohmann::json::exception& e) {
    throw CheckpointError(path + ": malformed header: " + e.what());
  }

  const auto count = r.le<std::uint64_t>();
  for (std::uint64_t i = 0; i < count; ++i) {
    const auto name_len = r.le<std::uint32_t>();
    const auto* name_bytes = r.take(name_len);
    std::string name(reinterpret_cast<const char*>(name_bytes), name_len);
    const auto type = static_cast<ScalarType>(r.le<std::uint8_t>());
    if (type != ScalarType::kFloat32 && type != ScalarType::kFloat64) {
      throw CheckpointError(path + ": unknown scalar type in record " + name);
    }
    const auto ndim = r.le<std::uint32_t>();
    Shape shape(ndim);
    for (auto& d : shape) d = static_cast<std::size_t>(r.le<std::uint64_t>());
    const std::size_t n = shape_numel(shape);
    const std::size_t width = type == ScalarType::kFloat32 ? 4 : 8;
    if (n > buf.size() / width) throw CheckpointError(path + ": truncated checkpoint");
    std::vector<double> values(n);
    for (auto& v : values) {
      v = type == ScalarType::kFloat32 ? static_cast<double>(std::bit_cast<float>(r.le<std::uint32_t>()))
                                       : std::bit_cast<double>(r.le<std::uint64_t>());
    }
    bool moment = false;
    for (int k = 0; k < 2; ++k) {
      const std::string prefix = kMomentPrefix[k];
      if (name.rfind(prefix, 0) == 0) {
        if (!has_optimizer) throw CheckpointError(path + ": optimizer record without optimizer state");
        auto& dst = k == 0 ? data.optimizer->m : data.optimizer->v;
        dst[name.substr(prefix.size())] = std::move(values);
        moment = true;
        break;
      }
    }
    if (moment) continue;
    if (data.state.count(name)) throw CheckpointError(path + ": duplicate record " + name);
    data.state.emplace(name, Tensor(std::move(shape), std::move(values)));
  }
  if (!r.done()) throw CheckpointError(path + ": trailing bytes after last record");
  return data;
}

void load_state(ConcateNet& model, const CheckpointData& data) {
  const auto expected = model.params().state();
  for (const auto& [name, t] : expected) {
    auto it = data.state.find(name);
    if (it == data.state.end()) throw CheckpointError("checkpoint is missing tensor " + name);
    if (it->second.shape() != t.shape()) {
      throw CheckpointError("shape mismatch for " + name + ": checkpoint " +
                            shape_str(it->second.shape()) + ", model " + shape_str(t.shape()));
    }
  }
  for (const auto& [name, t] : data.state) {
    if (!expected.count(name)) throw CheckpointError("unexpected tensor in checkpoint: " + name);
  }
  if (data.optimizer) {
    const auto& params = model.params().parameters();
    for (const auto* moments : {&data.optimizer->m, &data.optimizer->v}) {
      for (const auto& [name, values] : *moments) {
        auto it = params.find(name);
        if (it == params.end() || it->second.numel() != values.size()) {
          throw CheckpointError("optimizer state does not match parameter " + name);
        }
      }
    }
  }
  for (const auto& [name, t] : expected) {
    Tensor dst = t;
    const auto src = data.state.at(name).data();
    std::copy(src.begin(), src.end(), dst.data().begin());
  }
}

std::unique_ptr<ConcateNet> load_model(const std::string& path, TrainingMeta* meta) {
  const auto data = read_checkpoint(path);
  std::unique_ptr<ConcateNet> model;
  try {
    model = std::make_unique<ConcateNet>(data.config);
  } catch (const std::invalid_argument& e) {
    throw CheckpointError(path + ": invalid model config: " + e.what());
  }
  load_state(*model, data);
  if (meta) *meta = data.meta;
  return model;
}

}  // namespace concatenet
