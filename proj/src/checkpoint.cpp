#include "hse/checkpoint.h"

#include <cstring>
#include <cstdio>
#include <fstream>
#include <iterator>

#include "hse/error.h"

namespace hse {

namespace {

constexpr char kMagic[8] = {'H', 'S', 'E', 'C', 'K', 'P', 'T', '\0'};
constexpr std::uint32_t kFormatVersion = 1;

class Writer {
 public:
  template <class T>
  void put(T v) {
    const auto* p = reinterpret_cast<const unsigned char*>(&v);
    buf_.insert(buf_.end(), p, p + sizeof(T));
  }
  void bytes(const void* data, std::size_t n) {
    const auto* p = static_cast<const unsigned char*>(data);
    buf_.insert(buf_.end(), p, p + n);
  }
  void str(const std::string& s) {
    put<std::uint32_t>(static_cast<std::uint32_t>(s.size()));
    bytes(s.data(), s.size());
  }
  void tensor(const std::string& name, const Tensor& t) {
    str(name);
    for (int ax = 0; ax < 4; ++ax) put<std::uint64_t>(t.shape()[ax]);
    bytes(t.vec().data(), t.numel() * sizeof(double));
  }
  const std::vector<unsigned char>& data() const { return buf_; }

 private:
  std::vector<unsigned char> buf_;
};

class Reader {
 public:
  explicit Reader(std::vector<unsigned char> buf) : buf_(std::move(buf)) {}

  template <class T>
  T get() {
    need(sizeof(T));
    T v;
    std::memcpy(&v, buf_.data() + pos_, sizeof(T));
    pos_ += sizeof(T);
    return v;
  }
  std::string str() {
    const auto n = get<std::uint32_t>();
    need(n);
    std::string s(reinterpret_cast<const char*>(buf_.data() + pos_), n);
    pos_ += n;
    return s;
  }
  Tensor tensor(std::string* name) {
    *name = str();
    Shape s;
    for (int ax = 0; ax < 4; ++ax) s[ax] = get<std::uint64_t>();
    const std::size_t n = s.numel();
    if (n > (buf_.size() - pos_) / sizeof(double)) {
      throw IoError("checkpoint truncated inside tensor " + *name);
    }
    std::vector<double> v(n);
    std::memcpy(v.data(), buf_.data() + pos_, n * sizeof(double));
    pos_ += n * sizeof(double);
    return Tensor(s, std::move(v));
  }
  std::size_t pos() const { return pos_; }
  const std::vector<unsigned char>& data() const { return buf_; }

 private:
  void need(std::size_t n) const {
    if (buf_.size() - pos_ < n) throw IoError("checkpoint truncated");
  }
  std::vector<unsigned char> buf_;
  std::size_t pos_ = 0;
};

std::uint64_t fnv1a(const unsigned char* p, std::size_t n) {
  std::uint64_t h = 1469598103934665603ull;
  for (std::size_t i = 0; i < n; ++i) {
    h ^= p[i];
    h *= 1099511628211ull;
  }
  return h;
}

}  // namespace

void save_checkpoint(const Checkpoint& c, const std::string& path) {
  if (c.names.size() != c.params.size()) {
    throw Error("checkpoint names and tensors disagree in count");
  }
  Writer w;
  w.bytes(kMagic, sizeof kMagic);
  w.put<std::uint32_t>(kFormatVersion);
  w.put<std::uint64_t>(spec_hash(c.spec));
  w.str(to_json(c.spec));
  w.put<std::uint32_t>(c.epochs_done);
  w.put<std::uint32_t>(static_cast<std::uint32_t>(c.params.size()));
  for (std::size_t i = 0; i < c.params.size(); ++i) w.tensor(c.names[i], c.params[i]);
  w.put<std::uint64_t>(c.adam.step);
  const bool has_moments = !c.adam.m.empty();
  w.put<std::uint8_t>(has_moments ? 1 : 0);
  if (has_moments) {
    for (std::size_t i = 0; i < c.params.size(); ++i) w.tensor(c.names[i], c.adam.m[i]);
    for (std::size_t i = 0; i < c.params.size(); ++i) w.tensor(c.names[i], c.adam.v[i]);
  }
  w.put<std::uint32_t>(static_cast<std::uint32_t>(c.history.size()));
  for (const HistoryRow& r : c.history) {
    w.put<std::uint32_t>(r.epoch);
    w.put<double>(r.lr);
    w.put<double>(r.mean_loss);
    w.put<double>(r.eval_si_sdr);
    w.put<double>(r.eval_stoi);
  }
  w.put<std::uint64_t>(fnv1a(w.data().data(), w.data().size()));

  const std::string tmp = path + ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary);
    if (!out) throw IoError("cannot write checkpoint " + path);
    out.write(reinterpret_cast<const char*>(w.data().data()),
              static_cast<std::streamsize>(w.data().size()));
    if (!out) throw IoError("write failed for checkpoint " + path);
  }
  if (std::rename(tmp.c_str(), path.c_str()) != 0) {
    throw IoError("cannot move checkpoint into place at " + path);
  }
}

Checkpoint load_checkpoint(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open checkpoint " + path);
  std::vector<unsigned char> buf((std::istreambuf_iterator<char>(in)),
                                 std::istreambuf_iterator<char>());
  if (buf.size() < sizeof kMagic + 8 ||
      std::memcmp(buf.data(), kMagic, sizeof kMagic) != 0) {
    throw IoError(path + " is not a checkpoint");
  }
  std::uint64_t stored_sum;
  std::memcpy(&stored_sum, buf.data() + buf.size() - 8, 8);
  if (fnv1a(buf.data(), buf.size() - 8) != stored_sum) {
    throw IoError("checkpoint " + path + " is corrupt (checksum mismatch)");
  }
  Reader r(std::move(buf));
  for (std::size_t i = 0; i < sizeof kMagic; ++i) r.get<char>();
  const auto version = r.get<std::uint32_t>();
  if (version != kFormatVersion) {
    throw IoError("unsupported checkpoint version " + std::to_string(version));
  }
  const auto hash = r.get<std::uint64_t>();
  Checkpoint c;
  c.spec = spec_from_json(r.str());
  if (spec_hash(c.spec) != hash) {
    throw IoError("checkpoint spec hash does not match its embedded config");
  }
  c.epochs_done = r.get<std::uint32_t>();
  const auto n = r.get<std::uint32_t>();
  for (std::uint32_t i = 0; i < n; ++i) {
    std::string name;
    c.params.push_back(r.tensor(&name));
    c.names.push_back(name);
  }
  c.adam.step = r.get<std::uint64_t>();
  if (r.get<std::uint8_t>()) {
    std::string name;
    for (std::uint32_t i = 0; i < n; ++i) c.adam.m.push_back(r.tensor(&name));
    for (std::uint32_t i = 0; i < n; ++i) c.adam.v.push_back(r.tensor(&name));
  }
  const auto rows = r.get<std::uint32_t>();
  for (std::uint32_t i = 0; i < rows; ++i) {
    HistoryRow h;
    h.epoch = r.get<std::uint32_t>();
    h.lr = r.get<double>();
    h.mean_loss = r.get<double>();
    h.eval_si_sdr = r.get<double>();
    h.eval_stoi = r.get<double>();
    c.history.push_back(h);
  }
  if (r.pos() + 8 != r.data().size()) {
    throw IoError("checkpoint " + path + " has trailing bytes");
  }
  return c;
}

Checkpoint make_checkpoint(Model& model) {
  Checkpoint c;
  c.spec = model.spec();
  for (NamedTensor& nt : model.parameters()) {
    c.names.push_back(nt.name);
    c.params.push_back(nt.tensor->detach());
  }
  return c;
}

Model model_from_checkpoint(const Checkpoint& c) {
  Model m(c.spec);
  auto params = m.parameters();
  if (params.size() != c.params.size()) {
    throw GeometryError("checkpoint holds " + std::to_string(c.params.size()) +
                        " tensors, model expects " +
                        std::to_string(params.size()));
  }
  for (std::size_t i = 0; i < params.size(); ++i) {
    if (params[i].name != c.names[i] ||
        params[i].tensor->shape() != c.params[i].shape()) {
      throw GeometryError("checkpoint tensor " + c.names[i] + " " +
                          c.params[i].shape().str() + " does not match " +
                          params[i].name + " " +
                          params[i].tensor->shape().str());
    }
  }
  m.set_parameter_values(c.params);
  return m;
}

}  // namespace hse
