#include <bit>
#include <cstring>
#include <fstream>
#include <sstream>

#include "timeapn/train.hpp"

namespace apn::train {

namespace {

constexpr char kMagic[4] = {'A', 'P', 'N', '1'};

class Writer {
 public:
  explicit Writer(const std::string& path) : out_(path, std::ios::binary | std::ios::trunc) {
    if (!out_) throw Error("checkpoint: cannot open '" + path + "' for writing");
  }

  void bytes(const void* p, std::size_t n) { out_.write(static_cast<const char*>(p), static_cast<std::streamsize>(n)); }

  template <typename T>
  void uint(T v) {
    unsigned char buf[sizeof(T)];
    for (std::size_t i = 0; i < sizeof(T); ++i) buf[i] = static_cast<unsigned char>(v >> (8 * i));
    bytes(buf, sizeof buf);
  }

  void f64(double v) { uint(std::bit_cast<std::uint64_t>(v)); }

  void finish(const std::string& path) {
    out_.flush();
    if (!out_) throw Error("checkpoint: write to '" + path + "' failed");
  }

 private:
  std::ofstream out_;
};

class Reader {
 public:
  explicit Reader(const std::string& path) : in_(path, std::ios::binary), path_(path) {
    if (!in_) throw Error("checkpoint: cannot open '" + path + "'");
  }

  void bytes(void* p, std::size_t n) {
    in_.read(static_cast<char*>(p), static_cast<std::streamsize>(n));
    if (static_cast<std::size_t>(in_.gcount()) != n) {
      throw Error("checkpoint: '" + path_ + "' is truncated");
    }
  }

  template <typename T>
  T uint() {
    unsigned char buf[sizeof(T)];
    bytes(buf, sizeof buf);
    T v = 0;
    for (std::size_t i = 0; i < sizeof(T); ++i) v |= static_cast<T>(buf[i]) << (8 * i);
    return v;
  }

  double f64() { return std::bit_cast<double>(uint<std::uint64_t>()); }

  std::string string(std::uint64_t n, std::uint64_t limit) {
    if (n > limit) throw Error("checkpoint: '" + path_ + "' is corrupt (implausible length)");
    std::string s(static_cast<std::size_t>(n), '\0');
    bytes(s.data(), s.size());
    return s;
  }

  bool at_end() { return in_.peek() == std::char_traits<char>::eof(); }

 private:
  std::ifstream in_;
  std::string path_;
};

std::vector<std::pair<std::string, std::string>> key_values(const std::string& text) {
  std::vector<std::pair<std::string, std::string>> out;
  std::istringstream in(text);
  std::string line;
  while (std::getline(in, line)) {
    const auto eq = line.find('=');
    if (eq != std::string::npos) out.emplace_back(line.substr(0, eq), line.substr(eq + 1));
  }
  return out;
}

}  // namespace

void save_checkpoint(pipeline::Model& model, const std::string& path, int stage) {
  Writer w(path);
  w.bytes(kMagic, sizeof kMagic);
  const std::string echo = model.config.to_text() + "channels=" + std::to_string(model.channels) +
                           "\nstage=" + std::to_string(stage) + "\n";
  w.uint<std::uint64_t>(echo.size());
  w.bytes(echo.data(), echo.size());
  const auto params = model.all_parameters();
  w.uint<std::uint64_t>(params.size());
  for (const auto* p : params) {
    w.uint<std::uint32_t>(static_cast<std::uint32_t>(p->name().size()));
    w.bytes(p->name().data(), p->name().size());
    w.uint<std::uint32_t>(2);
    w.uint<std::uint64_t>(static_cast<std::uint64_t>(p->value.rows()));
    w.uint<std::uint64_t>(static_cast<std::uint64_t>(p->value.cols()));
    for (Eigen::Index i = 0; i < p->value.size(); ++i) w.f64(p->value.data()[i]);
  }
  w.finish(path);
}

LoadedCheckpoint load_checkpoint(const std::string& path) {
  Reader r(path);
  char magic[4];
  r.bytes(magic, sizeof magic);
  if (std::memcmp(magic, kMagic, sizeof magic) != 0) {
    throw Error("checkpoint: '" + path + "' is not a checkpoint (bad magic)");
  }
  const std::string echo = r.string(r.uint<std::uint64_t>(), 1 << 20);

  std::string config_text;
  int channels = 0;
  int stage = -1;
  for (const auto& [k, v] : key_values(echo)) {
    try {
      if (k == "channels") {
        channels = std::stoi(v);
      } else if (k == "stage") {
        stage = std::stoi(v);
      } else {
        config_text += k + "=" + v + "\n";
      }
    } catch (const std::logic_error&) {
      throw Error("checkpoint: bad " + k + " value '" + v + "'");
    }
  }
  if (channels < 1 || stage < 0) throw Error("checkpoint: config echo lacks channels/stage");

  LoadedCheckpoint out;
  out.stage = stage;
  out.model = std::make_unique<pipeline::Model>(ExperimentConfig::parse(config_text), channels);
  const auto params = out.model->all_parameters();
  const auto count = r.uint<std::uint64_t>();
  if (count != params.size()) {
    throw Error("checkpoint: expected " + std::to_string(params.size()) + " parameter blocks, found " +
                std::to_string(count));
  }
  for (auto* p : params) {
    const std::string name = r.string(r.uint<std::uint32_t>(), 4096);
    if (name != p->name()) {
      throw Error("checkpoint: expected block '" + p->name() + "', found '" + name + "'");
    }
    const auto ndims = r.uint<std::uint32_t>();
    const auto rows = r.uint<std::uint64_t>();
    const auto cols = r.uint<std::uint64_t>();
    if (ndims != 2 || rows != static_cast<std::uint64_t>(p->value.rows()) ||
        cols != static_cast<std::uint64_t>(p->value.cols())) {
      throw Error("checkpoint: block '" + name + "' has shape " + std::to_string(rows) + "x" +
                  std::to_string(cols) + ", expected " + std::to_string(p->value.rows()) + "x" +
                  std::to_string(p->value.cols()));
    }
    for (Eigen::Index i = 0; i < p->value.size(); ++i) p->value.data()[i] = r.f64();
    if (!p->value.allFinite()) throw Error("checkpoint: block '" + name + "' has non-finite values");
  }
  if (!r.at_end()) throw Error("checkpoint: trailing bytes after the last block");
  return out;
}

void check_compatible(const ExperimentConfig& stored, const ExperimentConfig& expected) {
  const auto a = key_values(stored.to_text());
  const auto b = key_values(expected.to_text());
  for (std::size_t i = 0; i < a.size() && i < b.size(); ++i) {
    if (a[i] != b[i]) {
      throw Error("checkpoint config mismatch in '" + a[i].first + "': checkpoint has " +
                  a[i].second + ", requested " + b[i].second);
    }
  }
}

}  // namespace apn::train
