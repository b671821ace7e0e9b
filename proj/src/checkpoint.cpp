#include "drape/checkpoint.hpp"

#include <bit>
#include <cstdint>
#include <cstring>
#include <fstream>

namespace drape::ad {

static_assert(std::endian::native == std::endian::little,
              "checkpoint container assumes a little-endian host");

namespace {

constexpr char kMagic[4] = {'D', 'F', 'R', 'G'};
constexpr std::uint32_t kVersion = 1;

void write_u32(std::ofstream& out, std::uint32_t v) {
  out.write(reinterpret_cast<const char*>(&v), sizeof(v));
}

std::uint32_t read_u32(std::ifstream& in) {
  std::uint32_t v = 0;
  in.read(reinterpret_cast<char*>(&v), sizeof(v));
  if (!in) throw ParseError("truncated checkpoint");
  return v;
}

}  // namespace

void save_checkpoint(const std::string& path, const std::vector<const Param*>& params) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError("cannot open '" + path + "' for writing");
  out.write(kMagic, 4);
  write_u32(out, kVersion);
  write_u32(out, static_cast<std::uint32_t>(params.size()));
  for (const Param* p : params) {
    write_u32(out, static_cast<std::uint32_t>(p->name.size()));
    out.write(p->name.data(), static_cast<std::streamsize>(p->name.size()));
    write_u32(out, 2);
    write_u32(out, static_cast<std::uint32_t>(p->value.rows()));
    write_u32(out, static_cast<std::uint32_t>(p->value.cols()));
    for (Eigen::Index i = 0; i < p->value.rows(); ++i) {
      for (Eigen::Index j = 0; j < p->value.cols(); ++j) {
        const double v = p->value(i, j);
        out.write(reinterpret_cast<const char*>(&v), sizeof(v));
      }
    }
  }
  if (!out) throw IoError("write failed for '" + path + "'");
}

std::map<std::string, Mat> load_checkpoint(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open '" + path + "' for reading");
  char magic[4];
  in.read(magic, 4);
  if (!in || std::memcmp(magic, kMagic, 4) != 0) {
    throw ParseError("'" + path + "' is not a DFRG checkpoint");
  }
  const std::uint32_t version = read_u32(in);
  if (version != kVersion) {
    throw ParseError("unsupported checkpoint version " + std::to_string(version));
  }
  const std::uint32_t count = read_u32(in);
  std::map<std::string, Mat> tensors;
  for (std::uint32_t t = 0; t < count; ++t) {
    const std::uint32_t name_len = read_u32(in);
    std::string name(name_len, '\0');
    in.read(name.data(), name_len);
    const std::uint32_t rank = read_u32(in);
    std::vector<std::uint32_t> dims(rank);
    std::uint64_t total = 1;
    for (std::uint32_t d = 0; d < rank; ++d) {
      dims[d] = read_u32(in);
      total *= dims[d];
    }
    const std::uint32_t rows = rank >= 1 ? dims[0] : 1;
    const std::uint32_t cols = rank >= 2 ? static_cast<std::uint32_t>(total / std::max(1u, rows))
                                         : 1;
    Mat m(rows, cols);
    for (std::uint32_t i = 0; i < rows; ++i) {
      for (std::uint32_t j = 0; j < cols; ++j) {
        double v = 0;
        in.read(reinterpret_cast<char*>(&v), sizeof(v));
        m(i, j) = v;
      }
    }
    if (!in) throw ParseError("truncated checkpoint payload for '" + name + "'");
    tensors.emplace(std::move(name), std::move(m));
  }
  return tensors;
}

std::vector<std::string> checkpoint_tensor_names(const std::string& path) {
  std::vector<std::string> names;
  for (const auto& [name, mat] : load_checkpoint(path)) names.push_back(name);
  return names;
}

}  // namespace drape::ad
