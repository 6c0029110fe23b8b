#include "mui/trace/binary.hpp"

#include <fstream>

namespace mui::trace {

std::uint64_t fnv1a64(std::span<const std::uint8_t> bytes, std::uint64_t seed) {
  std::uint64_t h = seed;
  for (std::uint8_t b : bytes) {
    h ^= b;
    h *= 0x100000001b3ULL;
  }
  return h;
}

std::vector<std::uint8_t> read_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorCode::kIo, "cannot open " + path.string());
  std::vector<std::uint8_t> bytes((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
  if (in.bad()) throw Error(ErrorCode::kIo, "read failed for " + path.string());
  return bytes;
}

void write_file(const std::filesystem::path& path, std::span<const std::uint8_t> bytes) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw Error(ErrorCode::kIo, "cannot open " + path.string() + " for writing");
  out.write(reinterpret_cast<const char*>(bytes.data()), static_cast<std::streamsize>(bytes.size()));
  if (!out) throw Error(ErrorCode::kIo, "write failed for " + path.string());
}

std::vector<std::uint8_t> frame(std::string_view magic, std::uint32_t version,
                                std::span<const std::uint8_t> payload) {
  ByteWriter w;
  w.raw({reinterpret_cast<const std::uint8_t*>(magic.data()), magic.size()});
  w.u32(version);
  w.u64(payload.size());
  w.raw(payload);
  w.u64(fnv1a64(payload));
  return std::move(w.bytes());
}

std::span<const std::uint8_t> unframe(std::span<const std::uint8_t> file, std::string_view magic,
                                      std::uint32_t version) {
  if (file.size() < 4 || std::memcmp(file.data(), magic.data(), 4) != 0)
    throw Error(ErrorCode::kFormat, "bad magic, expected " + std::string(magic));
  if (file.size() < 8) throw Error(ErrorCode::kTruncated, "missing version");
  ByteReader header(file.subspan(4, 4));
  const std::uint32_t got = header.u32();
  if (got != version)
    throw Error(ErrorCode::kVersionMismatch,
                "version " + std::to_string(got) + ", expected " + std::to_string(version));
  if (file.size() < 16) throw Error(ErrorCode::kTruncated, "missing payload length");
  ByteReader len_reader(file.subspan(8, 8));
  const std::uint64_t len = len_reader.u64();
  if (len > file.size() - 16 || file.size() - 16 - len < 8)
    throw Error(ErrorCode::kTruncated, "file shorter than declared payload");
  if (file.size() - 16 - len > 8) throw Error(ErrorCode::kFormat, "trailing bytes after checksum");
  auto payload = file.subspan(16, len);
  ByteReader tail(file.subspan(16 + len, 8));
  if (tail.u64() != fnv1a64(payload)) throw Error(ErrorCode::kChecksumMismatch, "payload checksum");
  return payload;
}

}  // namespace mui::trace
