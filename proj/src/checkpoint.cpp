#include <array>
#include <bit>
#include <cstring>
#include <fstream>
#include <istream>
#include <ostream>

#include "dpfed/error.hpp"
#include "dpfed/model.hpp"

namespace dpfed::model {
namespace {

constexpr std::array<char, 8> kMagic{'D', 'P', 'F', 'E', 'D', 'M', 'D', 'L'};

template <typename U>
void put_le(std::ostream& out, U value) {
  std::array<char, sizeof(U)> bytes;
  for (std::size_t i = 0; i < sizeof(U); ++i) {
    bytes[i] = static_cast<char>((value >> (8 * i)) & 0xff);
  }
  out.write(bytes.data(), bytes.size());
}

template <typename U>
U get_le(std::istream& in) {
  std::array<unsigned char, sizeof(U)> bytes;
  if (!in.read(reinterpret_cast<char*>(bytes.data()), bytes.size())) {
    throw IoError("checkpoint truncated");
  }
  U value = 0;
  for (std::size_t i = 0; i < sizeof(U); ++i) value |= static_cast<U>(bytes[i]) << (8 * i);
  return value;
}

}  // namespace

void write_checkpoint(std::ostream& out, const ModelParams& params) {
  params.shape.validate();
  if (params.values.size() != params.shape.parameter_count()) {
    throw LayoutError("cannot checkpoint a model whose values do not match its shape");
  }
  out.write(kMagic.data(), kMagic.size());
  put_le<std::uint32_t>(out, kCheckpointVersion);
  put_le<std::uint32_t>(out, params.activation == Activation::kRelu ? 0u : 1u);
  put_le<std::uint32_t>(out, static_cast<std::uint32_t>(params.shape.sizes.size()));
  for (std::size_t s : params.shape.sizes) put_le<std::uint64_t>(out, s);
  put_le<std::uint64_t>(out, params.values.size());
  for (double v : params.values) put_le<std::uint64_t>(out, std::bit_cast<std::uint64_t>(v));
  if (!out) throw IoError("failed to write checkpoint");
}

ModelParams read_checkpoint(std::istream& in) {
  std::array<char, 8> magic{};
  if (!in.read(magic.data(), magic.size()) || magic != kMagic) {
    throw IoError("not a model checkpoint (bad magic)");
  }
  const auto version = get_le<std::uint32_t>(in);
  if (version != kCheckpointVersion) {
    throw IoError("unsupported checkpoint version " + std::to_string(version));
  }
  const auto activation = get_le<std::uint32_t>(in);
  if (activation > 1) throw IoError("unknown activation code in checkpoint");
  const auto widths = get_le<std::uint32_t>(in);
  if (widths < 2 || widths > 1024) throw IoError("implausible layer count in checkpoint");
  ModelParams params;
  params.activation = activation == 0 ? Activation::kRelu : Activation::kTanh;
  for (std::uint32_t i = 0; i < widths; ++i) {
    params.shape.sizes.push_back(static_cast<std::size_t>(get_le<std::uint64_t>(in)));
  }
  try {
    params.shape.validate();
  } catch (const ValidationError& e) {
    throw IoError(std::string("checkpoint shape invalid: ") + e.what());
  }
  const auto count = get_le<std::uint64_t>(in);
  if (count != params.shape.parameter_count()) {
    throw IoError("checkpoint value count does not match its layer sizes");
  }
  params.values.resize(count);
  for (double& v : params.values) v = std::bit_cast<double>(get_le<std::uint64_t>(in));
  return params;
}

void save_checkpoint(const std::string& path, const ModelParams& params) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError("cannot open '" + path + "' for writing");
  write_checkpoint(out, params);
}

ModelParams load_checkpoint(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open '" + path + "'");
  return read_checkpoint(in);
}

}  // namespace dpfed::model
