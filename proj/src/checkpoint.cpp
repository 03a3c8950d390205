#include "gsamr/checkpoint.hpp"

#include <cstdint>
#include <cstring>

#include "gsamr/corpus.hpp"
#include "gsamr/error.hpp"

namespace gsamr {

namespace {

constexpr char kMagic[8] = {'G', 'S', 'A', 'M', 'R', 'C', 'K', '1'};

void put_u32(std::string& out, std::uint32_t v) {
  char buf[4];
  std::memcpy(buf, &v, 4);
  out.append(buf, 4);
}

void put_u64(std::string& out, std::uint64_t v) {
  char buf[8];
  std::memcpy(buf, &v, 8);
  out.append(buf, 8);
}

std::uint32_t take_u32(const std::string& in, std::size_t& pos) {
  if (pos + 4 > in.size()) throw DataError("checkpoint: truncated file");
  std::uint32_t v;
  std::memcpy(&v, in.data() + pos, 4);
  pos += 4;
  return v;
}

std::uint64_t take_u64(const std::string& in, std::size_t& pos) {
  if (pos + 8 > in.size()) throw DataError("checkpoint: truncated file");
  std::uint64_t v;
  std::memcpy(&v, in.data() + pos, 8);
  pos += 8;
  return v;
}

std::string take_bytes(const std::string& in, std::size_t& pos, std::size_t n) {
  if (pos + n > in.size()) throw DataError("checkpoint: truncated file");
  std::string s = in.substr(pos, n);
  pos += n;
  return s;
}

}  // namespace

std::string Checkpoint::serialize() const {
  static_assert(sizeof(double) == 8);
  std::string out(kMagic, 8);
  put_u32(out, static_cast<std::uint32_t>(meta.size()));
  for (const auto& [k, v] : meta) {
    put_u32(out, static_cast<std::uint32_t>(k.size()));
    out += k;
    put_u32(out, static_cast<std::uint32_t>(v.size()));
    out += v;
  }
  put_u64(out, vocab_json.size());
  out += vocab_json;
  put_u32(out, static_cast<std::uint32_t>(params.size()));
  for (const auto& [name, entry] : params) {
    const auto& [shape, values] = entry;
    put_u32(out, static_cast<std::uint32_t>(name.size()));
    out += name;
    put_u32(out, static_cast<std::uint32_t>(shape.size()));
    for (int d : shape) put_u32(out, static_cast<std::uint32_t>(d));
    put_u64(out, values.size());
    const std::size_t bytes = values.size() * 8;
    const std::size_t off = out.size();
    out.resize(off + bytes);
    std::memcpy(out.data() + off, values.data(), bytes);
  }
  return out;
}

Checkpoint Checkpoint::deserialize(const std::string& bytes) {
  if (bytes.size() < 8 || std::memcmp(bytes.data(), kMagic, 8) != 0) {
    throw DataError("checkpoint: bad magic");
  }
  std::size_t pos = 8;
  Checkpoint ck;
  const std::uint32_t meta_count = take_u32(bytes, pos);
  for (std::uint32_t i = 0; i < meta_count; ++i) {
    const std::string k = take_bytes(bytes, pos, take_u32(bytes, pos));
    const std::string v = take_bytes(bytes, pos, take_u32(bytes, pos));
    ck.meta[k] = v;
  }
  ck.vocab_json = take_bytes(bytes, pos, static_cast<std::size_t>(take_u64(bytes, pos)));
  const std::uint32_t param_count = take_u32(bytes, pos);
  for (std::uint32_t i = 0; i < param_count; ++i) {
    const std::string name = take_bytes(bytes, pos, take_u32(bytes, pos));
    const std::uint32_t rank = take_u32(bytes, pos);
    Shape shape;
    std::int64_t numel = 1;
    for (std::uint32_t r = 0; r < rank; ++r) {
      shape.push_back(static_cast<int>(take_u32(bytes, pos)));
      numel *= shape.back();
    }
    const std::uint64_t count = take_u64(bytes, pos);
    if (static_cast<std::int64_t>(count) != numel) {
      throw DataError("checkpoint: size mismatch for parameter " + name);
    }
    std::vector<double> values(count);
    const std::size_t byte_count = static_cast<std::size_t>(count) * 8;
    if (pos + byte_count > bytes.size()) throw DataError("checkpoint: truncated payload");
    std::memcpy(values.data(), bytes.data() + pos, byte_count);
    pos += byte_count;
    ck.params[name] = {std::move(shape), std::move(values)};
  }
  if (pos != bytes.size()) throw DataError("checkpoint: trailing bytes");
  return ck;
}

void Checkpoint::save(const std::string& path) const { write_file(path, serialize()); }

Checkpoint Checkpoint::load(const std::string& path) {
  return deserialize(read_file(path));
}

}  // namespace gsamr
