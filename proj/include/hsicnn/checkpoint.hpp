#pragma once

#include <cstdint>
#include <string>

#include "hsicnn/binary_io.hpp"
#include "hsicnn/error.hpp"
#include "hsicnn/model.hpp"

namespace hsicnn {

inline constexpr char kCheckpointMagic[] = "HSIM";
inline constexpr std::uint8_t kCheckpointVersion = 1;

// Parameters are stored as 32-bit floats regardless of the model's width.
template <typename T>
std::string encode_checkpoint(const Model<T>& model) {
  io::Writer w;
  w.bytes(kCheckpointMagic);
  w.u8(kCheckpointVersion);
  const auto& cfg = model.config();
  w.u32(static_cast<std::uint32_t>(cfg.window));
  w.u32(static_cast<std::uint32_t>(cfg.bands));
  w.u32(static_cast<std::uint32_t>(cfg.classes));
  w.f32(static_cast<float>(cfg.dropout));
  for (const auto* p : model.parameters()) {
    w.u32(static_cast<std::uint32_t>(p->rank()));
    for (auto e : p->shape()) w.u32(static_cast<std::uint32_t>(e));
    for (T v : p->data()) w.f32(static_cast<float>(v));
  }
  return w.take();
}

template <typename T>
Model<T> decode_checkpoint(std::string_view bytes, const std::string& what = "checkpoint") {
  io::Reader r(bytes, what, ErrorKind::checkpoint);
  r.expect_magic(kCheckpointMagic);
  r.expect_version(kCheckpointVersion);
  ArchitectureConfig cfg;
  cfg.window = r.u32();
  cfg.bands = r.u32();
  cfg.classes = r.u32();
  cfg.dropout = r.f32();
  Model<T> model;
  try {
    model = Model<T>(cfg, 0);
  } catch (const Error& e) {
    throw Error(ErrorKind::checkpoint, what + ": " + e.what());
  }
  std::size_t index = 0;
  for (auto* p : model.parameters()) {
    const std::uint32_t rank = r.u32();
    Shape shape(rank);
    for (auto& e : shape) e = r.u32();
    if (shape != p->shape()) {
      r.fail("parameter " + std::to_string(index) + " has shape " + shape_string(shape) +
             ", architecture expects " + shape_string(p->shape()));
    }
    r.need(p->size() * 4);
    for (auto& v : p->data()) v = static_cast<T>(r.f32());
    ++index;
  }
  r.expect_end();
  return model;
}

template <typename T>
void save_checkpoint(const Model<T>& model, const std::string& path) {
  io::write_file(path, encode_checkpoint(model));
}

template <typename T>
Model<T> load_checkpoint(const std::string& path) {
  return decode_checkpoint<T>(io::read_file(path), path);
}

}  // namespace hsicnn
