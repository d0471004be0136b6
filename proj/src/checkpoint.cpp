#include "sgl/checkpoint.hpp"

#include <bit>
#include <cstdint>
#include <cstring>
#include <fstream>
#include <sstream>

#include "sgl/errors.hpp"

namespace sgl {

namespace {

constexpr std::uint32_t kVersion = 1;

template <class T>
void put(std::string& out, T v) {
  static_assert(std::endian::native == std::endian::little, "little-endian host required");
  char buf[sizeof(T)];
  std::memcpy(buf, &v, sizeof(T));
  out.append(buf, sizeof(T));
}

template <class T>
T take(const std::string& in, std::size_t& pos) {
  if (pos + sizeof(T) > in.size()) throw IoError("checkpoint_corrupt", "checkpoint is truncated");
  T v;
  std::memcpy(&v, in.data() + pos, sizeof(T));
  pos += sizeof(T);
  return v;
}

}  // namespace

std::string encode_field(const Field& f) {
  std::string out = "SGL1";
  put<std::uint32_t>(out, kVersion);
  put<std::uint8_t>(out, static_cast<std::uint8_t>(f.grid.d));
  put<std::uint32_t>(out, static_cast<std::uint32_t>(f.grid.points_per_dim));
  put<double>(out, f.grid.box_length);
  out.reserve(out.size() + 16 * f.size());
  for (const cplx& z : f.values) {
    put<double>(out, z.real());
    put<double>(out, z.imag());
  }
  return out;
}

Field decode_field(const std::string& bytes) {
  if (bytes.size() < 4 || bytes.compare(0, 4, "SGL1") != 0) throw IoError("checkpoint_corrupt", "bad magic");
  std::size_t pos = 4;
  const auto version = take<std::uint32_t>(bytes, pos);
  if (version != kVersion) throw IoError("checkpoint_corrupt", "unsupported checkpoint version");
  Field f;
  f.grid.d = take<std::uint8_t>(bytes, pos);
  f.grid.points_per_dim = static_cast<int>(take<std::uint32_t>(bytes, pos));
  f.grid.box_length = take<double>(bytes, pos);
  try {
    f.grid.validate();
  } catch (const ValidationError& e) {
    throw IoError("checkpoint_corrupt", e.what());
  }
  if (bytes.size() != pos + 16 * f.grid.size()) throw IoError("checkpoint_corrupt", "checkpoint size mismatch");
  f.values.resize(f.grid.size());
  for (auto& z : f.values) {
    const double re = take<double>(bytes, pos);
    const double im = take<double>(bytes, pos);
    z = {re, im};
  }
  return f;
}

void write_atomic(const std::filesystem::path& path, const std::string& contents) {
  std::error_code ec;
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path(), ec);
  if (ec) throw IoError("io_failed", "cannot create " + path.parent_path().string() + ": " + ec.message());
  auto tmp = path;
  tmp += ".tmp";
  {
    std::ofstream os(tmp, std::ios::binary | std::ios::trunc);
    if (!os) throw IoError("io_failed", "cannot open " + tmp.string());
    os.write(contents.data(), static_cast<std::streamsize>(contents.size()));
    if (!os) throw IoError("io_failed", "write failed for " + tmp.string());
  }
  std::filesystem::rename(tmp, path, ec);
  if (ec) throw IoError("io_failed", "cannot rename " + tmp.string() + ": " + ec.message());
}

std::string read_file(const std::filesystem::path& path) {
  std::ifstream is(path, std::ios::binary);
  if (!is) throw IoError("io_failed", "cannot open " + path.string());
  std::ostringstream ss;
  ss << is.rdbuf();
  return ss.str();
}

void write_checkpoint(const std::filesystem::path& path, const Field& f) { write_atomic(path, encode_field(f)); }

Field read_checkpoint(const std::filesystem::path& path) { return decode_field(read_file(path)); }

}  // namespace sgl
