#include "markerlens/model_io.hpp"

#include <zlib.h>

#include <bit>
#include <cstring>
#include <fstream>
#include <sstream>

namespace markerlens {
namespace {

static_assert(std::endian::native == std::endian::little,
              "weight blocks are written little-endian; add byte swapping "
              "before porting to a big-endian target");

void append_doubles(std::string& out, const std::vector<double>& v) {
  const std::size_t bytes = v.size() * sizeof(double);
  const std::size_t offset = out.size();
  out.resize(offset + bytes);
  std::memcpy(out.data() + offset, v.data(), bytes);
}

void read_doubles(const std::string& blob, std::size_t& offset, std::vector<double>& v) {
  const std::size_t bytes = v.size() * sizeof(double);
  std::memcpy(v.data(), blob.data() + offset, bytes);
  offset += bytes;
}

std::uint32_t crc_of(const std::string& bytes) {
  return static_cast<std::uint32_t>(
      crc32(0L, reinterpret_cast<const Bytef*>(bytes.data()),
            static_cast<uInt>(bytes.size())));
}

}  // namespace

void save_model(const RegressionModel& model, const std::string& path) {
  std::ostringstream header;
  header << "MARKERLENS-MODEL v1\n";
  header << "arch conv";
  header << ' ' << model.extractor.blocks[0].in_ch;
  for (const ConvBlock& blk : model.extractor.blocks) header << ' ' << blk.out_ch;
  header << " input " << FeatureExtractor::kInputSize;
  header << " head " << model.head.layers.front().in;
  for (const DenseLayer& L : model.head.layers) header << ' ' << L.out;
  header << " acts";
  for (std::size_t i = 0; i < model.head.layers.size(); ++i) {
    header << (i + 1 < model.head.layers.size() ? " relu" : " sigmoid");
  }
  header << '\n';

  std::string weights;
  for (const ConvBlock& blk : model.extractor.blocks) {
    append_doubles(weights, blk.w);
    append_doubles(weights, blk.b);
  }
  for (const DenseLayer& L : model.head.layers) {
    append_doubles(weights, L.w);
    append_doubles(weights, L.b);
  }

  char checksum[32];
  std::snprintf(checksum, sizeof(checksum), "checksum %08x\n", crc_of(weights));

  std::ofstream out(path, std::ios::binary);
  if (!out || !(out << header.str() << weights << checksum) || !out.flush()) {
    throw Error(Errc::io_failure, "cannot write model: " + path);
  }
}

RegressionModel load_model(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(Errc::file_not_found, "cannot open model: " + path);

  std::string magic;
  if (!std::getline(in, magic)) {
    throw Error(Errc::corrupt_data, "empty model file: " + path);
  }
  if (magic != "MARKERLENS-MODEL v1") {
    throw Error(Errc::version_mismatch, "unknown model magic: " + magic);
  }

  std::string arch_line;
  if (!std::getline(in, arch_line)) {
    throw Error(Errc::corrupt_data, "missing architecture line: " + path);
  }

  std::istringstream arch(arch_line);
  std::string tok;
  arch >> tok;
  if (tok != "arch") throw Error(Errc::corrupt_data, "bad architecture line");
  arch >> tok;
  if (tok != "conv") throw Error(Errc::corrupt_data, "bad architecture line");

  std::array<int, 4> channels{};
  for (int& c : channels) {
    if (!(arch >> c)) throw Error(Errc::corrupt_data, "bad conv channels");
  }
  arch >> tok;
  int input_size = 0;
  if (tok != "input" || !(arch >> input_size) ||
      input_size != FeatureExtractor::kInputSize ||
      channels != FeatureExtractor::kChannels) {
    throw Error(Errc::corrupt_data, "unsupported extractor architecture");
  }

  arch >> tok;
  if (tok != "head") throw Error(Errc::corrupt_data, "bad architecture line");
  std::vector<int> dims;
  int d = 0;
  while (arch >> tok) {
    if (tok == "acts") break;
    try {
      d = std::stoi(tok);
    } catch (const std::exception&) {
      throw Error(Errc::corrupt_data, "bad head dimension: " + tok);
    }
    dims.push_back(d);
  }
  if (dims.size() < 2 || dims.back() != 1) {
    throw Error(Errc::corrupt_data, "bad head dimensions");
  }

  RegressionModel model;
  model.extractor = FeatureExtractor::random(0);
  if (dims.front() != static_cast<int>(model.extractor.feature_dim())) {
    throw Error(Errc::corrupt_data, "head input does not match the extractor");
  }
  model.extractor.frozen = true;
  model.head = RegressionHead::make(dims, 0);

  std::size_t weight_bytes = 0;
  for (const ConvBlock& blk : model.extractor.blocks) {
    weight_bytes += (blk.w.size() + blk.b.size()) * sizeof(double);
  }
  for (const DenseLayer& L : model.head.layers) {
    weight_bytes += (L.w.size() + L.b.size()) * sizeof(double);
  }

  std::string blob(weight_bytes, '\0');
  if (!in.read(blob.data(), static_cast<std::streamsize>(weight_bytes))) {
    throw Error(Errc::corrupt_data, "truncated weight block: " + path);
  }

  std::string trailer;
  std::getline(in, trailer);
  unsigned long stored_crc = 0;
  if (std::sscanf(trailer.c_str(), "checksum %lx", &stored_crc) != 1) {
    throw Error(Errc::corrupt_data, "missing checksum line: " + path);
  }
  if (static_cast<std::uint32_t>(stored_crc) != crc_of(blob)) {
    throw Error(Errc::checksum_mismatch, "weight checksum mismatch: " + path);
  }

  std::size_t offset = 0;
  for (ConvBlock& blk : model.extractor.blocks) {
    read_doubles(blob, offset, blk.w);
    read_doubles(blob, offset, blk.b);
  }
  for (DenseLayer& L : model.head.layers) {
    read_doubles(blob, offset, L.w);
    read_doubles(blob, offset, L.b);
  }
  return model;
}

std::uint32_t weights_digest(const FeatureExtractor& fe) {
  std::string bytes;
  for (const ConvBlock& blk : fe.blocks) {
    append_doubles(bytes, blk.w);
    append_doubles(bytes, blk.b);
  }
  return crc_of(bytes);
}

}  // namespace markerlens
